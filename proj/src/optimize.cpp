#include "etop/optimize.hpp"

#include <chrono>
#include <cmath>

namespace etop {

void BoundProblem::validate() const {
    if (!mesh || !orbits || !filter || !unit || !dofs)
        throw DomainError("bound problem is missing mesh/orbit/filter/element references");
    if (target_order < 1) throw DomainError("target cluster order must be >= 1");
    if (extra_clusters < 1) throw DomainError("extra cluster count must be >= 1");
    const int want = static_cast<int>(volume_fractions.size());
    if (want < 1 || want > 3 || want != scheme.channels())
        throw DomainError("one volume fraction per density channel is required");
    for (int i = 0; i < want; ++i) {
        if (!(volume_fractions[i] > 0 && volume_fractions[i] <= 1))
            throw DomainError("volume fractions must lie in (0, 1]");
        if (i > 0 && volume_fractions[i] > volume_fractions[i - 1])
            throw DomainError("volume fractions must be nested: V1 >= V2 >= V3");
    }
    if (!(bound_lower > 0) || !(bound_upper > bound_lower))
        throw DomainError("bound-variable box must be positive");
}

int required_clusters(const BoundProblem& problem) {
    return problem.kind == ProblemKind::EigMax
               ? problem.target_order + problem.extra_clusters - 1
               : problem.target_order + problem.extra_clusters;
}

namespace {

// Channel-blocked reduced design -> filtered per-channel density fields plus
// interpolated coefficients and derivative tables.
void interpolate_fields(const BoundProblem& p, const Eigen::VectorXd& x_reduced,
                        SpectrumResult& out) {
    const int channels = p.scheme.channels();
    const int reduced = p.orbits->num_reduced();
    if (x_reduced.size() != static_cast<Eigen::Index>(channels) * reduced)
        throw DomainError("reduced design vector must be channels * orbit count");

    const int n_ele = p.mesh->num_elements();
    out.densities.resize(n_ele, channels);
    for (int c = 0; c < channels; ++c) {
        const Eigen::VectorXd full =
            orbit_expand(*p.orbits, x_reduced.segment(c * reduced, reduced));
        out.densities.col(c) = filter_forward(*p.filter, full);
    }

    out.youngs_coeff.resize(n_ele);
    out.density_coeff.resize(n_ele);
    out.dyoungs.resize(n_ele, channels);
    out.ddensity.resize(n_ele, channels);
    std::array<double, 3> rho{0, 0, 0};
    for (int e = 0; e < n_ele; ++e) {
        for (int c = 0; c < channels; ++c) rho[c] = out.densities(e, c);
        const MaterialPoint pt = evaluate_material(p.scheme, rho.data());
        out.youngs_coeff[e] = pt.youngs;
        out.density_coeff[e] = pt.density;
        for (int c = 0; c < channels; ++c) {
            out.dyoungs(e, c) = pt.dyoungs[c];
            out.ddensity(e, c) = pt.ddensity[c];
        }
    }
}

// Chain d/d rho (n_ele x channels) back through the filter and the orbit map
// into the channel-blocked reduced design space.
Eigen::VectorXd reduce_gradient(const BoundProblem& p, const Eigen::MatrixXd& grad_rho) {
    const int channels = static_cast<int>(grad_rho.cols());
    const int reduced = p.orbits->num_reduced();
    Eigen::VectorXd g(static_cast<Eigen::Index>(channels) * reduced);
    for (int c = 0; c < channels; ++c)
        g.segment(c * reduced, reduced) =
            orbit_reduce_grad(*p.orbits, filter_backward(*p.filter, grad_rho.col(c)));
    return g;
}

}  // namespace

SpectrumResult compute_spectrum(const BoundProblem& problem, const Eigen::VectorXd& x_reduced,
                                std::optional<int> solve_count_hint) {
    problem.validate();
    SpectrumResult out;
    interpolate_fields(problem, x_reduced, out);

    const auto [K, M] =
        assemble(*problem.mesh, *problem.dofs, *problem.unit, out.youngs_coeff, out.density_coeff);

    const int required = required_clusters(problem);
    const int n_free = problem.dofs->num_free;
    int count = std::max(required + problem.budget.buffer, solve_count_hint.value_or(0));
    count = std::min(count, n_free - 1);

    for (int extension = 0;; ++extension) {
        out.eig = solve_smallest(K, M, count, problem.eigen_options);
        out.clusters = cluster_eigenvalues(out.eig.values, problem.cluster_tolerance);
        out.solve_count = count;
        out.extensions = extension;
        // All required clusters are closed once at least one eigenvalue landed
        // beyond the last of them.
        if (out.clusters.count() >= required + 1) {
            out.clusters.last_complete = false;  // trailing cluster stays open by definition
            return out;
        }
        if (extension == problem.budget.max_extensions || count >= n_free - 1)
            throw SolverError("cluster completeness not reachable within the eigen budget: " +
                              std::to_string(out.clusters.count()) + " clusters from " +
                              std::to_string(count) + " eigenvalues");
        count = std::min(count + problem.budget.buffer, n_free - 1);
    }
}

VolumeConstraints volume_constraints(const BoundProblem& problem,
                                     const Eigen::MatrixXd& densities) {
    const int n_con = static_cast<int>(problem.volume_fractions.size());
    const int n_ele = static_cast<int>(densities.rows());
    const int channels = static_cast<int>(densities.cols());
    if (channels != n_con)
        throw DomainError("density channels must match the volume-constraint count");
    const Eigen::VectorXd& v = problem.mesh->element_volumes;
    const double V = v.sum();

    VolumeConstraints out;
    out.values.resize(n_con);
    out.gradients.assign(n_con, Eigen::MatrixXd::Zero(n_ele, channels));
    // Constraint i uses the product of the first i+1 channels.
    for (int i = 0; i < n_con; ++i) {
        Eigen::VectorXd prod = Eigen::VectorXd::Ones(n_ele);
        for (int c = 0; c <= i; ++c) prod = prod.cwiseProduct(densities.col(c));
        out.values[i] = prod.dot(v) / V - problem.volume_fractions[i];
        for (int c = 0; c <= i; ++c) {
            Eigen::VectorXd partial = v / V;
            for (int cc = 0; cc <= i; ++cc)
                if (cc != c) partial = partial.cwiseProduct(densities.col(cc));
            out.gradients[i].col(c) = partial;
        }
    }
    return out;
}

std::vector<double> report_fractions(const BoundProblem& problem,
                                     const Eigen::VectorXd& final_constraints) {
    const int n_con = static_cast<int>(problem.volume_fractions.size());
    const int offset = problem.num_eig_constraints();
    if (final_constraints.size() != problem.num_constraints())
        throw DomainError("constraint vector does not match the problem layout");
    const auto f = [&](int i) { return final_constraints[offset + i]; };
    const auto& Vf = problem.volume_fractions;

    if (n_con == 1) return {Vf[0] + f(0)};
    if (n_con == 2) {
        const double phase1 = Vf[1] + f(1);
        return {phase1, Vf[0] - phase1 + f(0)};
    }
    const double phase1 = Vf[2] + f(2);
    const double phase2 = Vf[1] - phase1 + f(1);
    return {phase1, phase2, Vf[0] - phase1 - phase2 + f(0)};
}

Evaluation evaluate(const BoundProblem& problem, const SpectrumResult& spectrum,
                    const Eigen::VectorXd& beta_tilde, const Eigen::VectorXd& x_reduced) {
    const int nb = problem.num_bound_vars();
    if (beta_tilde.size() != nb) throw DomainError("bound-variable vector size mismatch");
    if (static_cast<int>(problem.bound_scales.size()) != nb)
        throw DomainError("bound scales not initialized");
    const int required = required_clusters(problem);
    if (spectrum.clusters.count() < required + 1)
        throw DomainError("spectrum does not carry complete required clusters");

    const int n_design = static_cast<int>(x_reduced.size());
    const int n_y = nb + n_design;
    const int n_con = problem.num_constraints();
    const int n_eig_con = problem.num_eig_constraints();

    Evaluation ev;
    ev.constraints.resize(n_con);
    ev.dconstraints = Eigen::MatrixXd::Zero(n_con, n_y);
    ev.df0 = Eigen::VectorXd::Zero(n_y);

    // Cluster means and their reduced-design gradients for clusters 1..required.
    std::vector<double> means(required);
    std::vector<Eigen::VectorXd> mean_grads(required);
    for (int q = 0; q < required; ++q) {
        const Cluster& cl = spectrum.clusters.clusters[q];
        means[q] = cl.mean;
        const Eigen::MatrixXd g_rho = cluster_mean_sensitivity(
            cl, spectrum.eig, *problem.mesh, *problem.dofs, *problem.unit, spectrum.dyoungs,
            spectrum.ddensity);
        mean_grads[q] = reduce_gradient(problem, g_rho);
    }

    if (problem.kind == ProblemKind::EigMax) {
        const double s = problem.bound_scales[0];
        const double beta = s * beta_tilde[0];
        ev.objective = beta;
        ev.f0 = -beta;
        ev.df0[0] = -s;
        // f_i = beta / mean_{n+i-1} - 1 <= 0
        for (int i = 0; i < n_eig_con; ++i) {
            const int q = problem.target_order - 1 + i;
            const double mean = means[q];
            ev.constraints[i] = beta / mean - 1.0;
            ev.dconstraints(i, 0) = s / mean;
            ev.dconstraints.row(i).tail(n_design) =
                (-beta / (mean * mean)) * mean_grads[q].transpose();
        }
    } else {
        const double s1 = problem.bound_scales[0], s2 = problem.bound_scales[1];
        const double beta1 = s1 * beta_tilde[0], beta2 = s2 * beta_tilde[1];
        ev.objective = beta2 - beta1;
        ev.f0 = -(beta2 - beta1);
        ev.df0[0] = s1;
        ev.df0[1] = -s2;
        // f_k = 1 - beta1 / mean_k <= 0 for the clusters kept below the gap.
        for (int k = 0; k < problem.target_order; ++k) {
            const double mean = means[k];
            ev.constraints[k] = 1.0 - beta1 / mean;
            ev.dconstraints(k, 0) = -s1 / mean;
            ev.dconstraints.row(k).tail(n_design) =
                (beta1 / (mean * mean)) * mean_grads[k].transpose();
        }
        // f_{n+j} = beta2 / mean_{n+j} - 1 <= 0 above the gap.
        for (int j = 0; j < problem.extra_clusters; ++j) {
            const int row = problem.target_order + j;
            const double mean = means[row];
            ev.constraints[row] = beta2 / mean - 1.0;
            ev.dconstraints(row, 1) = s2 / mean;
            ev.dconstraints.row(row).tail(n_design) =
                (-beta2 / (mean * mean)) * mean_grads[row].transpose();
        }
    }

    const VolumeConstraints vol = volume_constraints(problem, spectrum.densities);
    for (int i = 0; i < vol.values.size(); ++i) {
        const int row = n_eig_con + i;
        ev.constraints[row] = vol.values[i];
        ev.dconstraints.row(row).tail(n_design) =
            reduce_gradient(problem, vol.gradients[i]).transpose();
    }
    return ev;
}

Eigen::VectorXd initial_design(const BoundProblem& problem) {
    const int channels = problem.scheme.channels();
    const int reduced = problem.orbits->num_reduced();
    Eigen::VectorXd x0(static_cast<Eigen::Index>(channels) * reduced);
    const auto& Vf = problem.volume_fractions;
    for (int c = 0; c < channels; ++c) {
        const double value = (c == 0) ? Vf[0] : Vf[c] / Vf[c - 1];
        x0.segment(c * reduced, reduced).setConstant(value);
    }
    return x0;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> design_bounds(const BoundProblem& problem) {
    const int channels = problem.scheme.channels();
    const int reduced = problem.orbits->num_reduced();
    Eigen::VectorXd lo(static_cast<Eigen::Index>(channels) * reduced);
    Eigen::VectorXd hi = Eigen::VectorXd::Ones(lo.size());
    for (int c = 0; c < channels; ++c)
        lo.segment(c * reduced, reduced).setConstant(problem.scheme.lower_bound(c));
    return {std::move(lo), std::move(hi)};
}

RunResult run(BoundProblem& problem, const RunOptions& options,
              std::optional<Eigen::VectorXd> x0) {
    problem.validate();
    const int nb = problem.num_bound_vars();
    const int reduced = problem.orbits->num_reduced();
    const int channels = problem.scheme.channels();

    Eigen::VectorXd x = x0.value_or(initial_design(problem));
    Eigen::VectorXd beta_tilde = Eigen::VectorXd::Ones(nb);

    auto [xlo, xhi] = design_bounds(problem);
    Eigen::VectorXd ylo(nb + x.size()), yhi(nb + x.size());
    ylo.head(nb).setConstant(problem.bound_lower);
    yhi.head(nb).setConstant(problem.bound_upper);
    ylo.tail(x.size()) = xlo;
    yhi.tail(x.size()) = xhi;

    MmaOptions mma_options;
    mma_options.move_limit = options.move_limit;
    MmaSolver mma(ylo, yhi, problem.num_constraints(), mma_options);

    RunResult result;
    std::optional<int> hint;
    for (int it = 0; it <= options.iterations; ++it) {
        const auto t0 = std::chrono::steady_clock::now();
        SpectrumResult spectrum = compute_spectrum(problem, x, hint);
        hint = spectrum.solve_count;

        if (it == 0 && problem.bound_scales.empty()) {
            // Scale the bound variables so beta_tilde = 1 sits on the target
            // cluster means of the initial design.
            const auto& cl = spectrum.clusters.clusters;
            if (problem.kind == ProblemKind::EigMax) {
                problem.bound_scales = {cl[problem.target_order - 1].mean};
            } else {
                problem.bound_scales = {cl[problem.target_order - 1].mean,
                                        cl[problem.target_order].mean};
            }
        }

        const Evaluation ev = evaluate(problem, spectrum, beta_tilde, x);

        IterationRecord rec;
        rec.iteration = it;
        rec.objective = ev.objective;
        rec.constraints = ev.constraints;
        rec.omegas = spectrum.eig.values.cwiseSqrt();
        rec.cluster_sizes = spectrum.clusters.sizes();
        rec.phase_fractions = report_fractions(problem, ev.constraints);
        rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                                t0)
                          .count();
        result.history.push_back(rec);
        if (options.on_iteration) {
            Eigen::MatrixXd design_full(problem.mesh->num_elements(), channels);
            for (int c = 0; c < channels; ++c)
                design_full.col(c) = orbit_expand(*problem.orbits, x.segment(c * reduced, reduced));
            options.on_iteration(rec, spectrum.densities, design_full);
        }
        if (it == options.iterations) {
            result.densities = spectrum.densities;
            break;
        }

        Eigen::VectorXd y(nb + x.size());
        y.head(nb) = beta_tilde;
        y.tail(x.size()) = x;
        const Eigen::VectorXd y_next = mma.step(y, ev.df0, ev.constraints, ev.dconstraints);
        beta_tilde = y_next.head(nb);
        x = y_next.tail(x.size());
    }
    result.x_reduced = x;
    result.beta_tilde = beta_tilde;
    return result;
}

}  // namespace etop
