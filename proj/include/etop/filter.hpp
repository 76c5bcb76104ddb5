#pragma once

#include <Eigen/Sparse>

#include "etop/mesh.hpp"

namespace etop {

/// Row-stochastic linear density filter over element centroids: weights
/// w_pq = max(r_min - ||X_p - X_q||, 0) * v_q, normalized per row.
struct FilterOperator {
    Eigen::SparseMatrix<double, Eigen::RowMajor> weights;
    double radius = 0.0;
};

FilterOperator build_filter(const Mesh& mesh, double r_min);

Eigen::VectorXd filter_forward(const FilterOperator& filter, const Eigen::VectorXd& x);

/// Adjoint of the forward map: g_x = W^T g_rho.
Eigen::VectorXd filter_backward(const FilterOperator& filter, const Eigen::VectorXd& g_rho);

/// Copies each reduced value to every element in its orbit.
Eigen::VectorXd orbit_expand(const OrbitMap& orbits, const Eigen::VectorXd& reduced);

/// Adjoint of expansion: sums the full-mesh gradient over each orbit.
Eigen::VectorXd orbit_reduce_grad(const OrbitMap& orbits, const Eigen::VectorXd& full);

}  // namespace etop
