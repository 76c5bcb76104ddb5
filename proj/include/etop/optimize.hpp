#pragma once

#include <functional>
#include <optional>

#include "etop/assembly.hpp"
#include "etop/eigensolve.hpp"
#include "etop/filter.hpp"
#include "etop/material.hpp"
#include "etop/mma.hpp"
#include "etop/spectrum.hpp"

namespace etop {

enum class ProblemKind { EigMax, Bandgap };

struct EigenBudget {
    int buffer = 5;          // eigenvalues solved beyond the estimated need
    int max_extensions = 4;  // re-solves allowed when the last cluster stays open
};

/// Bound formulation for maximizing the n-th cluster mean or the gap between
/// the n-th and (n+1)-th cluster means, with one volume constraint per
/// material phase beyond void.
struct BoundProblem {
    ProblemKind kind = ProblemKind::EigMax;
    int target_order = 1;  // n
    int extra_clusters = 10;  // m

    std::vector<double> volume_fractions;  // V1 >= V2 >= V3, one per constraint
    double cluster_tolerance = 1e-8;
    EigenBudget budget;
    EigenOptions eigen_options;

    // Bound-variable scaling: beta = scale * beta_tilde, box on beta_tilde.
    std::vector<double> bound_scales;  // 1 entry (eigmax) or 2 (bandgap); set at iter 0
    double bound_lower = 1e-3;
    double bound_upper = 1e3;

    const Mesh* mesh = nullptr;
    const OrbitMap* orbits = nullptr;
    const FilterOperator* filter = nullptr;
    const UnitElementMatrices* unit = nullptr;
    const DofMap* dofs = nullptr;
    MaterialScheme scheme;

    int num_bound_vars() const { return kind == ProblemKind::EigMax ? 1 : 2; }
    int num_eig_constraints() const {
        return kind == ProblemKind::EigMax ? extra_clusters : target_order + extra_clusters;
    }
    int num_constraints() const {
        return num_eig_constraints() + static_cast<int>(volume_fractions.size());
    }
    void validate() const;
};

/// Clusters 1..n+m-1 (eigmax) or 1..n+m (bandgap) must be complete.
int required_clusters(const BoundProblem& problem);

/// Everything the evaluation needs at one design point.
struct SpectrumResult {
    EigenSet eig;
    ClusterSet clusters;
    int solve_count = 0;  // eigenvalues requested from the solver
    int extensions = 0;

    Eigen::MatrixXd densities;  // filtered rho, n_ele x channels
    Eigen::VectorXd youngs_coeff, density_coeff;
    Eigen::MatrixXd dyoungs, ddensity;  // n_ele x channels
};

/// Expands, filters, interpolates, assembles and solves; extends the eigen
/// budget until every required cluster is closed by a sentinel eigenvalue.
/// `x_reduced` is channel-blocked: channels * num_reduced entries.
SpectrumResult compute_spectrum(const BoundProblem& problem, const Eigen::VectorXd& x_reduced,
                                std::optional<int> solve_count_hint = {});

/// Objective, constraints and gradients w.r.t. the MMA variable vector
/// y = [beta_tilde; x_reduced]. The objective is returned in minimization
/// form (f0 = -physical objective).
struct Evaluation {
    double objective = 0.0;          // physical objective (maximized)
    double f0 = 0.0;                 // minimized by MMA
    Eigen::VectorXd df0;             // over y
    Eigen::VectorXd constraints;
    Eigen::MatrixXd dconstraints;    // num_constraints x y-size
};

Evaluation evaluate(const BoundProblem& problem, const SpectrumResult& spectrum,
                    const Eigen::VectorXd& beta_tilde, const Eigen::VectorXd& x_reduced);

/// Volume constraint values and d/d rho gradients (n_ele x channels each) from
/// the filtered density fields.
struct VolumeConstraints {
    Eigen::VectorXd values;
    std::vector<Eigen::MatrixXd> gradients;  // one n_ele x channels table per constraint
};

VolumeConstraints volume_constraints(const BoundProblem& problem,
                                     const Eigen::MatrixXd& densities);

/// Realized per-phase volume fractions from the final volume-constraint values
/// (identity for solid-void; the multi-phase cases decompose the products).
std::vector<double> report_fractions(const BoundProblem& problem,
                                     const Eigen::VectorXd& final_constraints);

struct IterationRecord {
    int iteration = 0;
    double objective = 0.0;
    Eigen::VectorXd constraints;
    Eigen::VectorXd omegas;  // sqrt(lambda) for the solved window
    std::vector<int> cluster_sizes;
    std::vector<double> phase_fractions;
    double wall_ms = 0.0;
};

struct RunOptions {
    int iterations = 500;
    double move_limit = 0.05;
    // Called after each recorded iteration with the expanded density fields.
    std::function<void(const IterationRecord&, const Eigen::MatrixXd& densities,
                       const Eigen::MatrixXd& design_full)>
        on_iteration;
};

struct RunResult {
    std::vector<IterationRecord> history;
    Eigen::VectorXd x_reduced;
    Eigen::VectorXd beta_tilde;
    Eigen::MatrixXd densities;  // final filtered fields, n_ele x channels
};

/// The optimization loop: evaluate, record, update via MMA, repeat. The
/// initial design is uniform at the volume thresholds unless `x0` is given.
RunResult run(BoundProblem& problem, const RunOptions& options,
              std::optional<Eigen::VectorXd> x0 = {});

/// Uniform initial design at the volume-fraction thresholds (channel-blocked).
Eigen::VectorXd initial_design(const BoundProblem& problem);

/// Per-channel variable bounds of the reduced design vector.
std::pair<Eigen::VectorXd, Eigen::VectorXd> design_bounds(const BoundProblem& problem);

}  // namespace etop
