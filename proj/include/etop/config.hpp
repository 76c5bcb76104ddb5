#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "etop/optimize.hpp"
#include "etop/verify.hpp"

namespace etop {

/// Fully validated job description parsed from the JSON config. Unknown keys
/// are rejected; defaults are materialized so the echoed config is complete.
struct JobConfig {
    // problem
    ProblemKind kind = ProblemKind::EigMax;
    int target_order = 1;
    int extra_clusters = 10;

    // mesh
    int dimension = 2;
    std::vector<int> cells;
    std::vector<double> lengths;
    std::vector<SupportSpec> supports;
    struct PointMassSpec {
        std::vector<double> at;
        double magnitude = 0.0;
    };
    std::vector<PointMassSpec> point_masses;
    Symmetry symmetry = Symmetry::None;

    // material
    SchemeKind scheme_kind = SchemeKind::SolidVoid;
    std::vector<double> youngs;
    std::vector<double> densities;
    double poisson = 0.3;
    double stiffness_penalty = 3.0;
    double mass_penalty = 6.0;
    double mass_threshold = 0.1;  // 0.02 when dimension == 3
    PlaneAssumption plane = PlaneAssumption::Strain;

    // optimization
    double filter_radius = 0.0;
    std::vector<double> volume_fractions;
    double cluster_tolerance = 1e-8;
    int iterations = 500;
    double move_limit = 0.05;
    EigenBudget budget;
    int eigen_count = 6;  // for the eig subcommand
    int snapshot_every = 0;  // 0: first and last iteration only
    std::uint64_t seed = 0;
    std::string output = "out";

    bool has_study = false;
    StudySpec study;

    static JobConfig parse(const std::string& text);
    std::string canonical_json() const;
    std::uint64_t hash() const;  // FNV-1a over the canonical form
};

/// The assembled immutable pieces a job needs; the problem points into them.
struct JobContext {
    Mesh mesh;
    OrbitMap orbits;
    FilterOperator filter;
    UnitElementMatrices unit;
    DofMap dofs;
    BoundProblem problem;

    JobContext(const JobContext&) = delete;
    JobContext& operator=(const JobContext&) = delete;
    JobContext() = default;
};

std::unique_ptr<JobContext> build_context(const JobConfig& config);

int cmd_optimize(const JobConfig& config, const std::string& out_dir);
int cmd_eig(const JobConfig& config, const std::string& out_dir);
int cmd_verify(const JobConfig& config, const std::string& out_dir);

}  // namespace etop
