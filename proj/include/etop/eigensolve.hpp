#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "etop/assembly.hpp"

namespace etop {

/// Ascending eigenvalues of K phi = lambda M phi over free DOFs, with
/// M-orthonormal eigenvectors stored column-wise.
struct EigenSet {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
    int count = 0;
};

struct EigenOptions {
    double tol = 1e-13;          // Ritz residual target on the inverted operator
    double accept_tol = 1e-10;   // residual level still accepted at budget exhaustion
    int max_steps_factor = 30;   // Lanczos step budget = max(factor * count, min_steps)
    int min_steps = 100;
    std::uint64_t seed = 0;      // start vector generator
};

/// Smallest `count` eigenpairs via shift-invert Lanczos at sigma = 0: K is
/// factored once and the Krylov basis of K^-1 M is grown with full
/// M-reorthogonalization until the wanted Ritz pairs converge.
EigenSet solve_smallest(const SparseMatrix& K, const SparseMatrix& M, int count,
                        const EigenOptions& options = {});

}  // namespace etop
