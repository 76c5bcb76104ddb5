#pragma once

#include <Eigen/Dense>

#include "etop/errors.hpp"

namespace etop {

struct MmaOptions {
    double move_limit = 0.05;  // per-iteration box half-width, scaled by variable range
    double asy_init = 0.5;
    double asy_increase = 1.2;
    double asy_decrease = 0.7;
    double asy_min_ratio = 0.001;  // asymptote distance floor, scaled by range
    double asy_max_ratio = 10.0;
    double albefa = 0.1;
    double raa0 = 1e-5;
    double epsimin = 1e-10;        // interior-point barrier floor (KKT residual level)
    double constraint_penalty = 1000.0;  // linear penalty on constraint slack variables
};

/// Method of moving asymptotes for min f0(x) s.t. f_i(x) <= 0, l <= x <= u.
/// Each step builds the separable convex approximation around the current
/// point and solves it with a primal-dual interior-point method on the dual
/// variables. Holds the asymptote history across iterations.
class MmaSolver {
public:
    MmaSolver(Eigen::VectorXd lower, Eigen::VectorXd upper, int num_constraints,
              MmaOptions options = {});

    /// One update. `dfdx` is num_constraints x n (may have zero rows).
    Eigen::VectorXd step(const Eigen::VectorXd& x, const Eigen::VectorXd& df0dx,
                         const Eigen::VectorXd& fval, const Eigen::MatrixXd& dfdx);

    int iteration() const { return iter_; }
    const MmaOptions& options() const { return options_; }

private:
    MmaOptions options_;
    Eigen::VectorXd lower_, upper_;
    int mcon_ = 0;
    int iter_ = 0;
    Eigen::VectorXd xold1_, xold2_, low_, upp_;
};

}  // namespace etop
