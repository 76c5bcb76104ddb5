#include "etop/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace etop {

Eigen::VectorXd cdm_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x, double delta, const Eigen::VectorXd* lower,
                             const Eigen::VectorXd* upper, std::vector<int>* one_sided) {
    if (!(delta > 0)) throw DomainError("CDM perturbation must be positive");
    Eigen::VectorXd grad(x.size());
    Eigen::VectorXd xp = x;
    for (int i = 0; i < x.size(); ++i) {
        double hi = delta, lo = delta;
        if (upper && x[i] + delta > (*upper)[i]) hi = 0.0;
        if (lower && x[i] - delta < (*lower)[i]) lo = 0.0;
        if (hi == 0.0 && lo == 0.0)
            throw DomainError("variable " + std::to_string(i) +
                              " has no room for the requested perturbation");
        if ((hi == 0.0 || lo == 0.0) && one_sided) one_sided->push_back(i);

        double fp, fm;
        try {
            xp[i] = x[i] + hi;
            fp = f(xp);
            xp[i] = x[i] - lo;
            fm = f(xp);
        } catch (const Error& err) {
            throw Error("CDM evaluation failed at coordinate " + std::to_string(i) + ": " +
                        err.what());
        }
        xp[i] = x[i];
        grad[i] = (fp - fm) / (hi + lo);
    }
    return grad;
}

SensitivityReport compare(std::string quantity, std::string space,
                          const Eigen::VectorXd& analytic, const Eigen::VectorXd& numeric,
                          double tolerance) {
    if (analytic.size() != numeric.size())
        throw DomainError("analytic and numeric gradients differ in length");
    SensitivityReport report;
    report.quantity = std::move(quantity);
    report.space = std::move(space);
    report.analytic = analytic;
    report.numeric = numeric;
    report.tolerance = tolerance;

    const double eps_den =
        analytic.size() ? 1e-12 * analytic.cwiseAbs().maxCoeff() : 0.0;
    report.rel_error.resize(analytic.size());
    for (int i = 0; i < analytic.size(); ++i) {
        const double diff = std::abs(analytic[i] - numeric[i]);
        const double den = std::max(std::abs(analytic[i]), eps_den);
        report.rel_error[i] =
            (den > 0.0) ? diff / den
                        : (diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    }
    report.max_rel_error = analytic.size() ? report.rel_error.maxCoeff() : 0.0;
    report.match = report.max_rel_error <= tolerance;
    return report;
}

namespace {

struct Quantity {
    std::string name;
    std::function<double(const Eigen::VectorXd&)> value;  // of the eigenvalue window
    Eigen::VectorXd grad_rho;                             // analytic d/d rho, n_ele
};

bool wants(const StudySpec& spec, const std::string& q) {
    for (const auto& s : spec.quantities)
        if (s == q) return true;
    return false;
}

}  // namespace

StudyResult run_study(const StudySpec& spec) {
    // The reference setup: square block, four corners fixed, solid-void.
    Mesh mesh = build_grid(2, {spec.cells, spec.cells}, {spec.side_length, spec.side_length});
    mesh = apply_supports(mesh, {SupportSpec{{{0, {0.0, spec.side_length}},
                                              {1, {0.0, spec.side_length}}},
                                             {}}});
    const OrbitMap orbits = compute_orbits(mesh, spec.symmetry);
    const FilterOperator filter = build_filter(mesh, spec.filter_radius);
    const auto h = mesh.cell_size();
    const UnitElementMatrices unit = unit_matrices({h[0], h[1]}, spec.poisson, 2);
    const DofMap dofs = build_dof_map(mesh);

    BoundProblem problem;
    problem.kind = ProblemKind::EigMax;
    problem.target_order = 1;
    problem.extra_clusters = 10;
    problem.volume_fractions = {spec.volume_fraction};
    problem.cluster_tolerance = spec.cluster_tolerance;
    problem.eigen_options.seed = spec.seed;
    problem.mesh = &mesh;
    problem.orbits = &orbits;
    problem.filter = &filter;
    problem.unit = &unit;
    problem.dofs = &dofs;
    problem.scheme = MaterialScheme::make(SchemeKind::SolidVoid, {spec.youngs}, {spec.density},
                                          spec.poisson, 3.0, 6.0, spec.mass_threshold);

    RunOptions warmup;
    warmup.iterations = spec.warmup_iterations;
    const RunResult warm = run(problem, warmup);
    const Eigen::VectorXd x_red = warm.x_reduced;

    const SpectrumResult base = compute_spectrum(problem, x_red);
    const int window = base.eig.count;

    StudyResult result;
    result.base_cluster_sizes = base.clusters.sizes();
    result.base_eigenvalues = base.eig.values;

    // Quantities with index structure frozen at the base state.
    std::vector<Quantity> quantities;
    const int n_required = required_clusters(problem);

    auto raw_grad = [&](int member) {
        const auto energies = element_energies(mesh, dofs, unit, base.eig.vectors.col(member));
        return Eigen::VectorXd(eig_density_gradient(energies, base.eig.values[member],
                                                    base.dyoungs, base.ddensity)
                                   .col(0));
    };

    std::vector<int> multi_clusters;
    for (int q = 0; q < std::min<int>(n_required, base.clusters.count()); ++q)
        if (base.clusters.clusters[q].size() > 1) multi_clusters.push_back(q);

    if (wants(spec, "repeated_eigenvalues")) {
        for (int q : multi_clusters)
            for (int m : base.clusters.clusters[q].members) {
                Quantity qty;
                qty.name = "lambda_" + std::to_string(m + 1);
                qty.value = [m](const Eigen::VectorXd& lam) { return lam[m]; };
                qty.grad_rho = raw_grad(m);
                quantities.push_back(std::move(qty));
            }
    }
    if (wants(spec, "cluster_means")) {
        for (int q : multi_clusters) {
            const auto members = base.clusters.clusters[q].members;
            Quantity qty;
            qty.name = "cluster_mean_" + std::to_string(q + 1);
            qty.value = [members](const Eigen::VectorXd& lam) {
                double s = 0;
                for (int m : members) s += lam[m];
                return s / static_cast<double>(members.size());
            };
            qty.grad_rho = Eigen::VectorXd::Zero(mesh.num_elements());
            for (int m : members) qty.grad_rho += raw_grad(m);
            qty.grad_rho /= static_cast<double>(members.size());
            quantities.push_back(std::move(qty));
        }
    }

    // Aggregates over the first `aggregate_clusters` clusters: once complete,
    // once with the trailing member of the last multi-member cluster dropped.
    const int n_agg = std::min(spec.aggregate_clusters, base.clusters.count());
    std::vector<int> complete_set;
    for (int q = 0; q < n_agg; ++q)
        for (int m : base.clusters.clusters[q].members) complete_set.push_back(m);
    std::vector<int> incomplete_set = complete_set;
    for (int q = n_agg - 1; q >= 0; --q)
        if (base.clusters.clusters[q].size() > 1) {
            const int drop = base.clusters.clusters[q].members.back();
            incomplete_set.erase(std::remove(incomplete_set.begin(), incomplete_set.end(), drop),
                                 incomplete_set.end());
            break;
        }

    auto add_aggregate = [&](const std::string& name, const std::vector<int>& members,
                             bool use_pnorm) {
        Eigen::VectorXd base_vals(members.size());
        for (size_t i = 0; i < members.size(); ++i) base_vals[i] = base.eig.values[members[i]];
        const double beta0 = base_vals.maxCoeff();
        const double param = use_pnorm ? spec.pnorm_p : spec.ks_q / beta0;
        // KS on raw eigenvalues needs q scaled to the eigenvalue magnitude to
        // keep the aggregate sharp; q/beta0 keeps the exponents O(1).
        auto eval = [members, beta0, param, use_pnorm](const Eigen::VectorXd& lam) {
            Eigen::VectorXd v(members.size());
            for (size_t i = 0; i < members.size(); ++i) v[i] = lam[members[i]];
            return use_pnorm ? pnorm_stable(v, param, beta0).first
                             : ks_stable(v, param, beta0).first;
        };
        Quantity qty;
        qty.name = name;
        qty.value = eval;
        const Eigen::VectorXd w = use_pnorm ? pnorm_stable(base_vals, param, beta0).second
                                            : ks_stable(base_vals, param, beta0).second;
        qty.grad_rho = Eigen::VectorXd::Zero(mesh.num_elements());
        for (size_t i = 0; i < members.size(); ++i) qty.grad_rho += w[i] * raw_grad(members[i]);
        quantities.push_back(std::move(qty));
    };
    const bool have_incomplete = incomplete_set.size() != complete_set.size();
    if (wants(spec, "pnorm")) {
        add_aggregate("pnorm_complete", complete_set, true);
        if (have_incomplete) add_aggregate("pnorm_incomplete", incomplete_set, true);
    }
    if (wants(spec, "ks")) {
        add_aggregate("ks_complete", complete_set, false);
        if (have_incomplete) add_aggregate("ks_incomplete", incomplete_set, false);
    }

    // One CDM sweep per variable space serves every quantity.
    auto eigenvalues_of_design = [&](const Eigen::VectorXd& x_full) {
        const Eigen::VectorXd rho = filter_forward(filter, x_full);
        Eigen::VectorXd E(mesh.num_elements()), R(mesh.num_elements());
        for (int e = 0; e < mesh.num_elements(); ++e) {
            const MaterialPoint pt = interp_solid_void(problem.scheme, rho[e]);
            E[e] = pt.youngs;
            R[e] = pt.density;
        }
        const auto [K, M] = assemble(mesh, dofs, unit, E, R);
        return solve_smallest(K, M, window, problem.eigen_options).values;
    };

    for (const auto& space : spec.spaces) {
        const bool symmetric = (space == "symmetric");
        if (!symmetric && space != "all")
            throw DomainError("unknown variable space '" + space + "'");

        const Eigen::VectorXd x_base = symmetric ? x_red : orbit_expand(orbits, x_red);
        std::vector<Eigen::VectorXd> numeric(quantities.size(),
                                             Eigen::VectorXd(x_base.size()));
        Eigen::VectorXd xp = x_base;
        for (int i = 0; i < x_base.size(); ++i) {
            xp[i] = x_base[i] + spec.delta_h;
            const Eigen::VectorXd lam_p =
                eigenvalues_of_design(symmetric ? orbit_expand(orbits, xp) : xp);
            xp[i] = x_base[i] - spec.delta_h;
            const Eigen::VectorXd lam_m =
                eigenvalues_of_design(symmetric ? orbit_expand(orbits, xp) : xp);
            xp[i] = x_base[i];
            for (size_t k = 0; k < quantities.size(); ++k)
                numeric[k][i] =
                    (quantities[k].value(lam_p) - quantities[k].value(lam_m)) /
                    (2.0 * spec.delta_h);
        }

        for (size_t k = 0; k < quantities.size(); ++k) {
            const Eigen::VectorXd g_full = filter_backward(filter, quantities[k].grad_rho);
            const Eigen::VectorXd analytic =
                symmetric ? orbit_reduce_grad(orbits, g_full) : g_full;
            result.reports.push_back(
                compare(quantities[k].name, space, analytic, numeric[k], spec.match_tol));
        }
    }
    return result;
}

}  // namespace etop
