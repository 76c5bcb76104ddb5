#pragma once

#include <functional>
#include <string>

#include "etop/optimize.hpp"

namespace etop {

/// Analytic-vs-central-difference comparison for one quantity over one
/// variable space.
struct SensitivityReport {
    std::string quantity;
    std::string space;  // "all" or "symmetric"
    Eigen::VectorXd analytic;
    Eigen::VectorXd numeric;
    Eigen::VectorXd rel_error;
    double max_rel_error = 0.0;
    double tolerance = 0.0;
    bool match = false;
};

/// Central differences per coordinate. Perturbations that would leave the
/// [lower, upper] box fall back to one-sided differences; the affected
/// coordinates are reported through `one_sided` when given.
Eigen::VectorXd cdm_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x, double delta,
                             const Eigen::VectorXd* lower = nullptr,
                             const Eigen::VectorXd* upper = nullptr,
                             std::vector<int>* one_sided = nullptr);

/// Elementwise relative errors with denominator max(|analytic_i|, eps_den),
/// eps_den = 1e-12 * max|analytic|.
SensitivityReport compare(std::string quantity, std::string space,
                          const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric,
                          double tolerance);

/// Square-block differentiability study: warm up the eigmax optimization for a
/// few iterations, freeze the design, then compare analytic and CDM gradients
/// of individual repeated eigenvalues, cluster means, and p-norm/KS aggregates
/// over complete and incomplete cluster sets.
struct StudySpec {
    int cells = 20;
    double side_length = 1.0;
    Symmetry symmetry = Symmetry::Half;
    int warmup_iterations = 10;
    double filter_radius = 0.6;
    double volume_fraction = 0.5;
    double youngs = 1.0;  // the reference setup leaves material constants open
    double density = 1.0;
    double poisson = 0.3;
    double mass_threshold = 0.1;
    double cluster_tolerance = 1e-8;

    std::vector<std::string> quantities = {"repeated_eigenvalues", "cluster_means", "pnorm", "ks"};
    std::vector<std::string> spaces = {"all", "symmetric"};

    double delta_h = 1e-8;
    double match_tol = 1e-4;
    double mismatch_factor = 10.0;
    double pnorm_p = 10.0;
    double ks_q = 10.0;
    int aggregate_clusters = 8;
    std::uint64_t seed = 0;
};

struct StudyResult {
    std::vector<SensitivityReport> reports;
    std::vector<int> base_cluster_sizes;
    Eigen::VectorXd base_eigenvalues;
};

StudyResult run_study(const StudySpec& spec);

}  // namespace etop
