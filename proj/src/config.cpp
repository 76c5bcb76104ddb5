#include "etop/config.hpp"

#include <filesystem>
#include <iostream>
#include <set>

#include <json.hpp>

#include "etop/output.hpp"

namespace etop {

namespace {

using nlohmann::json;

void require_keys(const json& obj, const std::string& path, const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw ConfigError(path + ": expected an object");
    for (const auto& [key, _] : obj.items())
        if (!allowed.count(key)) throw ConfigError(path + "." + key + ": unknown key");
}

template <typename T>
T get_or(const json& obj, const std::string& path, const std::string& key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(path + "." + key + ": type mismatch");
    }
}

template <typename T>
T get_required(const json& obj, const std::string& path, const std::string& key) {
    if (!obj.contains(key)) throw ConfigError(path + "." + key + ": missing required key");
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(path + "." + key + ": type mismatch");
    }
}

int axis_of(const std::string& name, const std::string& path) {
    if (name == "x") return 0;
    if (name == "y") return 1;
    if (name == "z") return 2;
    throw ConfigError(path + ": axis must be x, y or z, got '" + name + "'");
}

std::vector<SupportSpec> parse_supports(const json& arr, const std::string& path, int dimension) {
    if (!arr.is_array() || arr.empty())
        throw ConfigError(path + ": at least one support entry is required");
    std::vector<SupportSpec> specs;
    for (size_t i = 0; i < arr.size(); ++i) {
        const std::string at = path + "[" + std::to_string(i) + "]";
        const json& entry = arr[i];
        require_keys(entry, at, {"where", "dofs"});
        SupportSpec spec;
        const json& where = entry.contains("where") ? entry.at("where") : json::object();
        if (where.is_string() && where.get<std::string>() == "corners") {
            // Shorthand for all domain corners; the caller fills in the side
            // lengths once known (empty list = both extremes of the axis).
            for (int a = 0; a < dimension; ++a) spec.where[a] = {};
        } else if (where.is_object()) {
            for (const auto& [key, value] : where.items()) {
                const int axis = axis_of(key, at + ".where");
                if (axis >= dimension)
                    throw ConfigError(at + ".where." + key + ": axis exceeds mesh dimension");
                std::vector<double> values;
                if (value.is_number()) {
                    values.push_back(value.get<double>());
                } else if (value.is_array()) {
                    for (const auto& v : value) {
                        if (!v.is_number())
                            throw ConfigError(at + ".where." + key + ": expected numbers");
                        values.push_back(v.get<double>());
                    }
                } else {
                    throw ConfigError(at + ".where." + key + ": expected number or array");
                }
                spec.where[axis] = std::move(values);
            }
        } else {
            throw ConfigError(at + ".where: expected an object or \"corners\"");
        }
        if (entry.contains("dofs")) {
            const json& dofs = entry.at("dofs");
            if (dofs.is_string()) {
                if (dofs.get<std::string>() != "all")
                    throw ConfigError(at + ".dofs: expected \"all\" or an axis list");
            } else if (dofs.is_array()) {
                for (const auto& d : dofs) {
                    if (!d.is_string()) throw ConfigError(at + ".dofs: expected axis names");
                    const int axis = axis_of(d.get<std::string>(), at + ".dofs");
                    if (axis >= dimension)
                        throw ConfigError(at + ".dofs: axis exceeds mesh dimension");
                    spec.dofs.push_back(axis);
                }
            } else {
                throw ConfigError(at + ".dofs: expected \"all\" or an axis list");
            }
        }
        specs.push_back(std::move(spec));
    }
    return specs;
}

StudySpec parse_study(const json& obj, const std::string& path, std::uint64_t seed) {
    require_keys(obj, path,
                 {"cells", "side_length", "symmetry", "warmup_iterations", "filter_radius",
                  "volume_fraction", "youngs", "density", "poisson", "mass_threshold",
                  "cluster_tolerance", "quantities", "spaces", "delta_h", "match_tol",
                  "mismatch_factor", "pnorm_p", "ks_q", "aggregate_clusters"});
    StudySpec spec;
    spec.cells = get_or(obj, path, "cells", spec.cells);
    spec.side_length = get_or(obj, path, "side_length", spec.side_length);
    spec.symmetry = symmetry_from_string(get_or<std::string>(obj, path, "symmetry", "half"));
    spec.warmup_iterations = get_or(obj, path, "warmup_iterations", spec.warmup_iterations);
    spec.filter_radius = get_or(obj, path, "filter_radius", spec.filter_radius);
    spec.volume_fraction = get_or(obj, path, "volume_fraction", spec.volume_fraction);
    spec.youngs = get_or(obj, path, "youngs", spec.youngs);
    spec.density = get_or(obj, path, "density", spec.density);
    spec.poisson = get_or(obj, path, "poisson", spec.poisson);
    spec.mass_threshold = get_or(obj, path, "mass_threshold", spec.mass_threshold);
    spec.cluster_tolerance = get_or(obj, path, "cluster_tolerance", spec.cluster_tolerance);
    spec.quantities = get_or(obj, path, "quantities", spec.quantities);
    spec.spaces = get_or(obj, path, "spaces", spec.spaces);
    spec.delta_h = get_or(obj, path, "delta_h", spec.delta_h);
    spec.match_tol = get_or(obj, path, "match_tol", spec.match_tol);
    spec.mismatch_factor = get_or(obj, path, "mismatch_factor", spec.mismatch_factor);
    spec.pnorm_p = get_or(obj, path, "pnorm_p", spec.pnorm_p);
    spec.ks_q = get_or(obj, path, "ks_q", spec.ks_q);
    spec.aggregate_clusters = get_or(obj, path, "aggregate_clusters", spec.aggregate_clusters);
    spec.seed = seed;
    return spec;
}

}  // namespace

JobConfig JobConfig::parse(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    require_keys(root, "config",
                 {"problem", "mesh", "supports", "point_masses", "symmetry", "material",
                  "filter_radius", "volume_fractions", "cluster_tolerance", "iterations",
                  "move_limit", "eigen_budget", "eigen_count", "snapshot_every", "seed", "output",
                  "study"});

    JobConfig cfg;

    const json problem = root.value("problem", json::object());
    require_keys(problem, "problem", {"kind", "n", "m"});
    const std::string kind = get_or<std::string>(problem, "problem", "kind", "eigmax");
    if (kind == "eigmax") cfg.kind = ProblemKind::EigMax;
    else if (kind == "bandgap") cfg.kind = ProblemKind::Bandgap;
    else throw ConfigError("problem.kind: expected eigmax or bandgap");
    cfg.target_order = get_or(problem, "problem", "n", 1);
    cfg.extra_clusters = get_or(problem, "problem", "m", 10);
    if (cfg.target_order < 1) throw ConfigError("problem.n: must be >= 1");
    if (cfg.extra_clusters < 1) throw ConfigError("problem.m: must be >= 1");

    const json mesh = get_required<json>(root, "config", "mesh");
    require_keys(mesh, "mesh", {"dimension", "cells", "lengths"});
    cfg.dimension = get_required<int>(mesh, "mesh", "dimension");
    if (cfg.dimension != 2 && cfg.dimension != 3) throw ConfigError("mesh.dimension: must be 2 or 3");
    cfg.cells = get_required<std::vector<int>>(mesh, "mesh", "cells");
    cfg.lengths = get_required<std::vector<double>>(mesh, "mesh", "lengths");
    if (static_cast<int>(cfg.cells.size()) != cfg.dimension)
        throw ConfigError("mesh.cells: needs one entry per axis");
    if (static_cast<int>(cfg.lengths.size()) != cfg.dimension)
        throw ConfigError("mesh.lengths: needs one entry per axis");
    for (int c : cfg.cells)
        if (c < 1) throw ConfigError("mesh.cells: entries must be >= 1");
    for (double l : cfg.lengths)
        if (!(l > 0)) throw ConfigError("mesh.lengths: entries must be positive");

    cfg.supports =
        parse_supports(get_required<json>(root, "config", "supports"), "supports", cfg.dimension);
    // Resolve the "corners" shorthand (empty value lists) now that lengths are known.
    for (auto& spec : cfg.supports)
        for (auto& [axis, values] : spec.where)
            if (values.empty()) values = {0.0, cfg.lengths[axis]};

    const json masses = root.value("point_masses", json::array());
    if (!masses.is_array()) throw ConfigError("point_masses: expected an array");
    for (size_t i = 0; i < masses.size(); ++i) {
        const std::string at = "point_masses[" + std::to_string(i) + "]";
        require_keys(masses[i], at, {"at", "m"});
        PointMassSpec pm;
        pm.at = get_required<std::vector<double>>(masses[i], at, "at");
        pm.magnitude = get_required<double>(masses[i], at, "m");
        if (static_cast<int>(pm.at.size()) != cfg.dimension)
            throw ConfigError(at + ".at: needs one coordinate per axis");
        if (pm.magnitude < 0) throw ConfigError(at + ".m: must be >= 0");
        cfg.point_masses.push_back(std::move(pm));
    }

    cfg.symmetry = symmetry_from_string(get_or<std::string>(root, "config", "symmetry", "none"));

    const json material = get_required<json>(root, "config", "material");
    require_keys(material, "material",
                 {"scheme", "youngs", "densities", "poisson", "stiffness_penalty", "mass_penalty",
                  "mass_threshold", "plane"});
    try {
        cfg.scheme_kind = scheme_from_string(get_required<std::string>(material, "material", "scheme"));
    } catch (const DomainError& e) {
        throw ConfigError(std::string("material.scheme: ") + e.what());
    }
    cfg.youngs = get_required<std::vector<double>>(material, "material", "youngs");
    cfg.densities = get_required<std::vector<double>>(material, "material", "densities");
    cfg.poisson = get_or(material, "material", "poisson", 0.3);
    cfg.stiffness_penalty = get_or(material, "material", "stiffness_penalty", 3.0);
    cfg.mass_penalty = get_or(material, "material", "mass_penalty", 6.0);
    cfg.mass_threshold =
        get_or(material, "material", "mass_threshold", cfg.dimension == 3 ? 0.02 : 0.1);
    const std::string plane = get_or<std::string>(material, "material", "plane", "strain");
    if (plane == "strain") cfg.plane = PlaneAssumption::Strain;
    else if (plane == "stress") cfg.plane = PlaneAssumption::Stress;
    else throw ConfigError("material.plane: expected strain or stress");

    cfg.filter_radius = get_required<double>(root, "config", "filter_radius");
    if (!(cfg.filter_radius > 0)) throw ConfigError("filter_radius: must be positive");

    cfg.volume_fractions = get_required<std::vector<double>>(root, "config", "volume_fractions");
    for (size_t i = 0; i < cfg.volume_fractions.size(); ++i) {
        if (!(cfg.volume_fractions[i] > 0 && cfg.volume_fractions[i] <= 1))
            throw ConfigError("volume_fractions: entries must lie in (0, 1]");
        if (i > 0 && cfg.volume_fractions[i] > cfg.volume_fractions[i - 1])
            throw ConfigError("volume_fractions: thresholds must be nested (V1 >= V2 >= V3)");
    }

    cfg.cluster_tolerance = get_or(root, "config", "cluster_tolerance", 1e-8);
    if (!(cfg.cluster_tolerance > 0)) throw ConfigError("cluster_tolerance: must be positive");
    cfg.iterations = get_or(root, "config", "iterations", 500);
    if (cfg.iterations < 0) throw ConfigError("iterations: must be >= 0");
    cfg.move_limit = get_or(root, "config", "move_limit", 0.05);
    if (!(cfg.move_limit > 0)) throw ConfigError("move_limit: must be positive");

    const json budget = root.value("eigen_budget", json::object());
    require_keys(budget, "eigen_budget", {"buffer", "extensions"});
    cfg.budget.buffer = get_or(budget, "eigen_budget", "buffer", 5);
    cfg.budget.max_extensions = get_or(budget, "eigen_budget", "extensions", 4);
    if (cfg.budget.buffer < 1) throw ConfigError("eigen_budget.buffer: must be >= 1");
    if (cfg.budget.max_extensions < 0) throw ConfigError("eigen_budget.extensions: must be >= 0");

    cfg.eigen_count = get_or(root, "config", "eigen_count", 6);
    if (cfg.eigen_count < 1) throw ConfigError("eigen_count: must be >= 1");
    cfg.snapshot_every = get_or(root, "config", "snapshot_every", 0);
    if (cfg.snapshot_every < 0) throw ConfigError("snapshot_every: must be >= 0");
    cfg.seed = get_or<std::uint64_t>(root, "config", "seed", 0);
    cfg.output = get_or<std::string>(root, "config", "output", "out");

    if (root.contains("study")) {
        cfg.has_study = true;
        cfg.study = parse_study(root.at("study"), "study", cfg.seed);
    }

    // Scheme-level invariants surface here so bad configs fail before any work.
    try {
        (void)MaterialScheme::make(cfg.scheme_kind, cfg.youngs, cfg.densities, cfg.poisson,
                                   cfg.stiffness_penalty, cfg.mass_penalty, cfg.mass_threshold);
    } catch (const DomainError& e) {
        throw ConfigError(std::string("material: ") + e.what());
    }
    const int channels =
        MaterialScheme::make(cfg.scheme_kind, cfg.youngs, cfg.densities, cfg.poisson,
                             cfg.stiffness_penalty, cfg.mass_penalty, cfg.mass_threshold)
            .channels();
    if (static_cast<int>(cfg.volume_fractions.size()) != channels)
        throw ConfigError("volume_fractions: needs one threshold per density channel (" +
                          std::to_string(channels) + ")");
    return cfg;
}

std::string JobConfig::canonical_json() const {
    json root;
    root["problem"] = {{"kind", kind == ProblemKind::EigMax ? "eigmax" : "bandgap"},
                       {"n", target_order},
                       {"m", extra_clusters}};
    root["mesh"] = {{"dimension", dimension}, {"cells", cells}, {"lengths", lengths}};
    json supports_json = json::array();
    for (const auto& spec : supports) {
        json where = json::object();
        static const char* axes = "xyz";
        for (const auto& [axis, values] : spec.where)
            where[std::string(1, axes[axis])] = values;
        json dofs;
        if (spec.dofs.empty()) {
            dofs = "all";
        } else {
            dofs = json::array();
            for (int d : spec.dofs) dofs.push_back(std::string(1, axes[d]));
        }
        supports_json.push_back({{"where", where}, {"dofs", dofs}});
    }
    root["supports"] = supports_json;
    json masses = json::array();
    for (const auto& pm : point_masses) masses.push_back({{"at", pm.at}, {"m", pm.magnitude}});
    root["point_masses"] = masses;
    root["symmetry"] = to_string(symmetry);
    root["material"] = {{"scheme", to_string(scheme_kind)},
                        {"youngs", youngs},
                        {"densities", densities},
                        {"poisson", poisson},
                        {"stiffness_penalty", stiffness_penalty},
                        {"mass_penalty", mass_penalty},
                        {"mass_threshold", mass_threshold},
                        {"plane", plane == PlaneAssumption::Strain ? "strain" : "stress"}};
    root["filter_radius"] = filter_radius;
    root["volume_fractions"] = volume_fractions;
    root["cluster_tolerance"] = cluster_tolerance;
    root["iterations"] = iterations;
    root["move_limit"] = move_limit;
    root["eigen_budget"] = {{"buffer", budget.buffer}, {"extensions", budget.max_extensions}};
    root["eigen_count"] = eigen_count;
    root["snapshot_every"] = snapshot_every;
    root["seed"] = seed;
    root["output"] = output;
    if (has_study) {
        root["study"] = {{"cells", study.cells},
                         {"side_length", study.side_length},
                         {"symmetry", to_string(study.symmetry)},
                         {"warmup_iterations", study.warmup_iterations},
                         {"filter_radius", study.filter_radius},
                         {"volume_fraction", study.volume_fraction},
                         {"youngs", study.youngs},
                         {"density", study.density},
                         {"poisson", study.poisson},
                         {"mass_threshold", study.mass_threshold},
                         {"cluster_tolerance", study.cluster_tolerance},
                         {"quantities", study.quantities},
                         {"spaces", study.spaces},
                         {"delta_h", study.delta_h},
                         {"match_tol", study.match_tol},
                         {"mismatch_factor", study.mismatch_factor},
                         {"pnorm_p", study.pnorm_p},
                         {"ks_q", study.ks_q},
                         {"aggregate_clusters", study.aggregate_clusters}};
    }
    return root.dump(2);
}

std::uint64_t JobConfig::hash() const {
    const std::string text = canonical_json();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::unique_ptr<JobContext> build_context(const JobConfig& config) {
    auto ctx = std::make_unique<JobContext>();
    ctx->mesh = build_grid(config.dimension, config.cells, config.lengths);
    ctx->mesh = apply_supports(std::move(ctx->mesh), config.supports);
    for (const auto& pm : config.point_masses)
        ctx->mesh = add_point_mass(std::move(ctx->mesh), pm.at, pm.magnitude);
    validate_mesh(ctx->mesh);

    ctx->orbits = compute_orbits(ctx->mesh, config.symmetry);
    ctx->filter = build_filter(ctx->mesh, config.filter_radius);
    const auto h = ctx->mesh.cell_size();
    std::vector<double> cell(h.begin(), h.begin() + config.dimension);
    ctx->unit = unit_matrices(cell, config.poisson, config.dimension, config.plane);
    ctx->dofs = build_dof_map(ctx->mesh);

    BoundProblem& p = ctx->problem;
    p.kind = config.kind;
    p.target_order = config.target_order;
    p.extra_clusters = config.extra_clusters;
    p.volume_fractions = config.volume_fractions;
    p.cluster_tolerance = config.cluster_tolerance;
    p.budget = config.budget;
    p.eigen_options.seed = config.seed;
    p.mesh = &ctx->mesh;
    p.orbits = &ctx->orbits;
    p.filter = &ctx->filter;
    p.unit = &ctx->unit;
    p.dofs = &ctx->dofs;
    p.scheme = MaterialScheme::make(config.scheme_kind, config.youngs, config.densities,
                                    config.poisson, config.stiffness_penalty, config.mass_penalty,
                                    config.mass_threshold);
    p.validate();
    return ctx;
}

namespace {

namespace fs = std::filesystem;

void write_config_echo(const JobConfig& config, const fs::path& dir) {
    std::ofstream out(dir / "config_echo.json", std::ios::binary);
    out << config.canonical_json() << "\n";
}

void write_density_files(const JobConfig& config, const fs::path& dir, int iteration,
                         const Eigen::MatrixXd& densities) {
    const std::uint64_t hash = config.hash();
    const std::array<int, 3> cells = {config.cells[0], config.cells[1],
                                      config.dimension == 3 ? config.cells[2] : 1};
    {
        std::ofstream out(dir / ("density_" + std::to_string(iteration) + ".csv"),
                          std::ios::binary);
        out << "# config_hash=" << hash_hex(hash) << "\n";
        const int nx = cells[0];
        for (int c = 0; c < densities.cols(); ++c) {
            out << "# channel " << c << ", row-major element grid\n";
            for (Eigen::Index row = 0; row < densities.rows() / nx; ++row) {
                for (int i = 0; i < nx; ++i)
                    out << (i ? "," : "") << format_double(densities(row * nx + i, c));
                out << "\n";
            }
        }
    }
    for (int c = 0; c < densities.cols(); ++c) {
        const std::string suffix =
            (densities.cols() > 1 ? "_ch" + std::to_string(c) : std::string());
        write_density_pgm(
            (dir / ("density_" + std::to_string(iteration) + suffix + ".pgm")).string(), hash,
            densities.col(c), cells, config.dimension, false);
        write_density_pgm(
            (dir / ("density_" + std::to_string(iteration) + suffix + "_bin.pgm")).string(), hash,
            densities.col(c), cells, config.dimension, true);
    }
}

}  // namespace

int cmd_optimize(const JobConfig& config, const std::string& out_dir) {
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    write_config_echo(config, dir);
    const std::uint64_t hash = config.hash();

    auto ctx = build_context(config);
    const int n_con = ctx->problem.num_constraints();
    const int n_req = required_clusters(ctx->problem);
    const int n_eigs = std::min(n_req + config.budget.buffer, ctx->dofs.num_free - 1);

    std::vector<std::string> history_cols = {"iter", "f0"};
    for (int i = 1; i <= n_con; ++i) history_cols.push_back("f" + std::to_string(i));
    CsvWriter history((dir / "history.csv").string(), hash, history_cols);
    CsvWriter timings((dir / "timings.csv").string(), hash, {"iter", "wall_ms"});
    std::vector<std::string> eig_cols = {"iter"};
    for (int i = 1; i <= n_eigs; ++i) eig_cols.push_back("omega_" + std::to_string(i));
    CsvWriter eigs((dir / "eigs.csv").string(), hash, eig_cols);
    std::vector<std::string> cluster_cols = {"iter"};
    for (int i = 1; i <= n_req; ++i) cluster_cols.push_back("N" + std::to_string(i));
    CsvWriter clusters((dir / "clusters.csv").string(), hash, cluster_cols);

    RunOptions options;
    options.iterations = config.iterations;
    options.move_limit = config.move_limit;
    Eigen::VectorXd final_constraints;
    options.on_iteration = [&](const IterationRecord& rec, const Eigen::MatrixXd& densities,
                               const Eigen::MatrixXd&) {
        std::vector<double> row = {static_cast<double>(rec.iteration), rec.objective};
        for (int i = 0; i < rec.constraints.size(); ++i) row.push_back(rec.constraints[i]);
        history.write_row(row);
        timings.write_row({static_cast<double>(rec.iteration), rec.wall_ms});

        row = {static_cast<double>(rec.iteration)};
        for (int i = 0; i < n_eigs && i < rec.omegas.size(); ++i) row.push_back(rec.omegas[i]);
        eigs.write_row(row);

        row = {static_cast<double>(rec.iteration)};
        for (int i = 0; i < n_req; ++i)
            row.push_back(i < static_cast<int>(rec.cluster_sizes.size())
                              ? static_cast<double>(rec.cluster_sizes[i])
                              : 0.0);
        clusters.write_row(row);

        const bool snapshot = rec.iteration == 0 || rec.iteration == config.iterations ||
                              (config.snapshot_every > 0 &&
                               rec.iteration % config.snapshot_every == 0);
        if (snapshot) write_density_files(config, dir, rec.iteration, densities);
        final_constraints = rec.constraints;

        double max_con = rec.constraints.size() ? rec.constraints.maxCoeff() : 0.0;
        std::cout << "iter " << rec.iteration << "  f0 " << format_double(rec.objective)
                  << "  max constraint " << format_double(max_con) << "\n";
    };

    const RunResult result = run(ctx->problem, options);

    if (ctx->problem.scheme.channels() > 1) {
        CsvWriter fractions((dir / "fractions.csv").string(), hash, {"phase", "fraction"});
        const auto f = report_fractions(ctx->problem, final_constraints);
        for (size_t i = 0; i < f.size(); ++i)
            fractions.write_row_mixed({std::to_string(i + 1), format_double(f[i])});
    }
    std::cout << "done: " << result.history.size() << " records written to " << dir.string()
              << "\n";
    return 0;
}

int cmd_eig(const JobConfig& config, const std::string& out_dir) {
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    write_config_echo(config, dir);

    auto ctx = build_context(config);
    SpectrumResult spectrum;
    // Direct pass-through of the smallest eigen_count pairs at the initial design.
    BoundProblem& p = ctx->problem;
    const Eigen::VectorXd x0 = initial_design(p);
    spectrum = compute_spectrum(p, x0, std::max(p.budget.buffer + required_clusters(p),
                                                config.eigen_count));
    const int n = std::min(config.eigen_count, spectrum.eig.count);

    std::vector<std::string> cols = {"iter"};
    for (int i = 1; i <= n; ++i) cols.push_back("omega_" + std::to_string(i));
    CsvWriter eigs((dir / "eigs.csv").string(), config.hash(), cols);
    std::vector<double> row = {0.0};
    for (int i = 0; i < n; ++i) row.push_back(std::sqrt(spectrum.eig.values[i]));
    eigs.write_row(row);

    for (int i = 0; i < n; ++i)
        std::cout << "lambda_" << (i + 1) << " = " << format_double(spectrum.eig.values[i])
                  << "  omega = " << format_double(std::sqrt(spectrum.eig.values[i])) << "\n";
    return 0;
}

int cmd_verify(const JobConfig& config, const std::string& out_dir) {
    if (!config.has_study) throw ConfigError("study: block required for the verify subcommand");
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    write_config_echo(config, dir);
    const std::uint64_t hash = config.hash();

    const StudyResult result = run_study(config.study);

    CsvWriter summary((dir / "study_summary.csv").string(), hash,
                      {"quantity", "space", "variables", "max_rel_error", "verdict"});
    for (const auto& report : result.reports) {
        const bool mismatch =
            report.max_rel_error >= config.study.mismatch_factor * config.study.match_tol;
        summary.write_row_mixed({report.quantity, report.space,
                                 std::to_string(report.analytic.size()),
                                 format_double(report.max_rel_error),
                                 report.match ? "match" : (mismatch ? "mismatch" : "indeterminate")});
        CsvWriter detail((dir / ("study_" + report.quantity + "_" + report.space + ".csv")).string(),
                         hash, {"variable", "analytic", "cdm", "rel_error"});
        for (int i = 0; i < report.analytic.size(); ++i)
            detail.write_row({static_cast<double>(i), report.analytic[i], report.numeric[i],
                              report.rel_error[i]});
        std::cout << report.quantity << " w.r.t. " << report.space
                  << " variables: max rel err " << format_double(report.max_rel_error) << " -> "
                  << (report.match ? "match" : (mismatch ? "mismatch" : "indeterminate")) << "\n";
    }
    {
        CsvWriter sizes((dir / "study_clusters.csv").string(), hash, {"cluster", "size"});
        for (size_t i = 0; i < result.base_cluster_sizes.size(); ++i)
            sizes.write_row({static_cast<double>(i + 1),
                             static_cast<double>(result.base_cluster_sizes[i])});
    }
    return 0;
}

}  // namespace etop
