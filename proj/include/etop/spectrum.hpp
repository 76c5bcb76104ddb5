#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "etop/assembly.hpp"
#include "etop/eigensolve.hpp"

namespace etop {

struct Cluster {
    std::vector<int> members;  // eigenvalue indices, ascending
    double mean = 0.0;

    int size() const { return static_cast<int>(members.size()); }
};

/// Partition of computed eigenvalues into multiplicity clusters. Whether the
/// trailing cluster holds all eigenvalues at its level is unknowable from the
/// computed window alone, hence the completeness flag.
struct ClusterSet {
    std::vector<Cluster> clusters;
    double tolerance = 1e-8;
    bool last_complete = false;

    int count() const { return static_cast<int>(clusters.size()); }
    int total_members() const;
    std::vector<int> sizes() const;
};

/// Greedy left-to-right clustering anchored at each cluster's minimum:
/// |lambda_r - lambda_min| / |lambda_min| <= tolerance keeps r in the cluster.
ClusterSet cluster_eigenvalues(const Eigen::VectorXd& values, double tolerance);

double cluster_mean(const Cluster& cluster);

/// Per-element quadratic forms phi_e^T Khat phi_e and phi_e^T Mhat phi_e for
/// one eigenvector; the element-local building blocks of every eigenvalue
/// sensitivity.
struct ElementEnergies {
    Eigen::VectorXd stiffness;
    Eigen::VectorXd mass;
};

ElementEnergies element_energies(const Mesh& mesh, const DofMap& dofs,
                                 const UnitElementMatrices& unit, const Eigen::VectorXd& phi);

/// d lambda / d rho per element and channel for one eigenpair, assuming the
/// eigenvalue is differentiable: dE_e * (phi K phi)_e - lambda * drho_e * (phi M phi)_e.
/// `dyoungs`/`ddensity` are n_ele x channels. Point masses are design-independent
/// and contribute nothing.
Eigen::MatrixXd eig_density_gradient(const ElementEnergies& energies, double lambda,
                                     const Eigen::MatrixXd& dyoungs,
                                     const Eigen::MatrixXd& ddensity);

/// Guarded variant: refuses eigenvalues that sit in a multi-member cluster.
Eigen::MatrixXd simple_eig_sensitivity(const EigenSet& eig, int index, const ClusterSet& clusters,
                                       const Mesh& mesh, const DofMap& dofs,
                                       const UnitElementMatrices& unit,
                                       const Eigen::MatrixXd& dyoungs,
                                       const Eigen::MatrixXd& ddensity);

/// Mean of the member sensitivities; differentiable for complete clusters
/// regardless of the eigenvector basis the solver returned.
Eigen::MatrixXd cluster_mean_sensitivity(const Cluster& cluster, const EigenSet& eig,
                                         const Mesh& mesh, const DofMap& dofs,
                                         const UnitElementMatrices& unit,
                                         const Eigen::MatrixXd& dyoungs,
                                         const Eigen::MatrixXd& ddensity);

/// Overflow-safe p-norm of positive values: beta0 * (sum (v/beta0)^p)^(1/p).
/// Returns the value and the partial derivatives w.r.t. each input.
std::pair<double, Eigen::VectorXd> pnorm_stable(const Eigen::VectorXd& values, double p,
                                                double beta0);

/// Overflow-safe KS aggregate: beta0 + ln(sum exp(q (v - beta0))) / q.
std::pair<double, Eigen::VectorXd> ks_stable(const Eigen::VectorXd& values, double q,
                                             double beta0);

}  // namespace etop
