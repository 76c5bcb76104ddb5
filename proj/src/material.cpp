#include "etop/material.hpp"

#include <cmath>
#include <tuple>

namespace etop {

namespace {

constexpr double kVoidChannelMin = 1e-4;

// Filtered densities are convex combinations of admissible values; round-off
// can land a hair outside the box. Snap that dust back, reject real violations.
void check_range(double& rho, double lo, const char* what) {
    constexpr double slack = 1e-9;
    if (rho > 1.0 && rho <= 1.0 + slack) rho = 1.0;
    if (rho < lo && rho >= lo - slack) rho = lo;
    if (!(rho >= lo && rho <= 1.0))
        throw DomainError(std::string(what) + " density out of [" + std::to_string(lo) + ", 1]");
}

// Below-threshold mass multiplier g(rho) = c1 rho^p2 + c2 rho^(p2+1) and its
// slope; above threshold g(rho) = rho.
std::pair<double, double> mass_multiplier(const MaterialScheme& s, double rho) {
    if (rho <= s.mass_threshold) {
        const double rp = std::pow(rho, s.mass_penalty - 1.0);
        const double g = s.c1 * rp * rho + s.c2 * rp * rho * rho;
        const double dg = s.mass_penalty * s.c1 * rp + (s.mass_penalty + 1.0) * s.c2 * rp * rho;
        return {g, dg};
    }
    return {rho, 1.0};
}

}  // namespace

SchemeKind scheme_from_string(const std::string& kind) {
    if (kind == "solid_void") return SchemeKind::SolidVoid;
    if (kind == "bi_material") return SchemeKind::BiMaterial;
    if (kind == "bi_void") return SchemeKind::BiVoid;
    if (kind == "tri_void") return SchemeKind::TriVoid;
    throw DomainError("unknown material scheme '" + kind + "'");
}

std::string to_string(SchemeKind kind) {
    switch (kind) {
        case SchemeKind::SolidVoid: return "solid_void";
        case SchemeKind::BiMaterial: return "bi_material";
        case SchemeKind::BiVoid: return "bi_void";
        case SchemeKind::TriVoid: return "tri_void";
    }
    return "solid_void";
}

int MaterialScheme::channels() const {
    switch (kind) {
        case SchemeKind::SolidVoid:
        case SchemeKind::BiMaterial: return 1;
        case SchemeKind::BiVoid: return 2;
        case SchemeKind::TriVoid: return 3;
    }
    return 1;
}

int MaterialScheme::phases() const {
    switch (kind) {
        case SchemeKind::SolidVoid: return 1;
        case SchemeKind::BiMaterial:
        case SchemeKind::BiVoid: return 2;
        case SchemeKind::TriVoid: return 3;
    }
    return 1;
}

double MaterialScheme::lower_bound(int channel) const {
    if (kind == SchemeKind::BiMaterial) return 0.0;
    return channel == 0 ? kVoidChannelMin : 0.0;
}

std::pair<double, double> continuity_coeffs(double mass_penalty, double mass_threshold) {
    if (!(mass_threshold > 0.0 && mass_threshold < 1.0))
        throw DomainError("mass threshold must lie strictly inside (0, 1)");
    if (!(mass_penalty >= 1.0)) throw DomainError("mass penalty must be >= 1");
    // c1 t^p + c2 t^(p+1) = t  and  p c1 t^(p-1) + (p+1) c2 t^p = 1.
    const double c1 = mass_penalty * std::pow(mass_threshold, 1.0 - mass_penalty);
    const double c2 = (1.0 - mass_penalty) * std::pow(mass_threshold, -mass_penalty);
    return {c1, c2};
}

MaterialScheme MaterialScheme::make(SchemeKind kind, std::vector<double> youngs,
                                    std::vector<double> densities, double poisson,
                                    double stiffness_penalty, double mass_penalty,
                                    double mass_threshold) {
    MaterialScheme s;
    s.kind = kind;
    s.youngs = std::move(youngs);
    s.densities = std::move(densities);
    s.poisson = poisson;
    s.stiffness_penalty = stiffness_penalty;
    s.mass_penalty = mass_penalty;
    s.mass_threshold = mass_threshold;

    if (static_cast<int>(s.youngs.size()) != s.phases() ||
        static_cast<int>(s.densities.size()) != s.phases())
        throw DomainError("material scheme needs one modulus and one density per phase");
    for (double e : s.youngs)
        if (!(e > 0)) throw DomainError("Young's moduli must be positive");
    for (double r : s.densities)
        if (!(r > 0)) throw DomainError("mass densities must be positive");
    if (!(poisson > 0.0 && poisson < 0.5)) throw DomainError("Poisson ratio must lie in (0, 0.5)");
    if (!(stiffness_penalty >= 1.0)) throw DomainError("stiffness penalty must be >= 1");

    std::tie(s.c1, s.c2) = continuity_coeffs(mass_penalty, mass_threshold);
    return s;
}

MaterialPoint interp_solid_void(const MaterialScheme& s, double rho) {
    check_range(rho, s.lower_bound(0), "solid-void");
    const double p1 = s.stiffness_penalty;
    const double Es = s.youngs[0], rs = s.densities[0];

    MaterialPoint pt;
    pt.youngs = std::pow(rho, p1) * Es;
    pt.dyoungs[0] = p1 * std::pow(rho, p1 - 1.0) * Es;
    const auto [g, dg] = mass_multiplier(s, rho);
    pt.density = g * rs;
    pt.ddensity[0] = dg * rs;
    return pt;
}

MaterialPoint interp_bi(const MaterialScheme& s, double rho) {
    check_range(rho, 0.0, "bi-material");
    const double p = s.stiffness_penalty;
    const double E1 = s.youngs[0], E2 = s.youngs[1];
    const double r1 = s.densities[0], r2 = s.densities[1];

    MaterialPoint pt;
    const double rp = std::pow(rho, p);
    pt.youngs = rp * E1 + (1.0 - rp) * E2;
    pt.dyoungs[0] = p * std::pow(rho, p - 1.0) * (E1 - E2);
    pt.density = rho * r1 + (1.0 - rho) * r2;
    pt.ddensity[0] = r1 - r2;
    return pt;
}

MaterialPoint interp_bi_void(const MaterialScheme& s, double rho1, double rho2) {
    check_range(rho1, s.lower_bound(0), "bi-void channel 1");
    check_range(rho2, 0.0, "bi-void channel 2");
    const double p1 = s.stiffness_penalty;
    const double E1 = s.youngs[0], E2 = s.youngs[1];
    const double r1 = s.densities[0], r2 = s.densities[1];

    const double r2p = std::pow(rho2, p1);
    const double E12 = r2p * E1 + (1.0 - r2p) * E2;
    const double dE12 = p1 * std::pow(rho2, p1 - 1.0) * (E1 - E2);
    const double rho12 = rho2 * r1 + (1.0 - rho2) * r2;

    MaterialPoint pt;
    const double r1p = std::pow(rho1, p1);
    pt.youngs = r1p * E12;
    pt.dyoungs[0] = p1 * std::pow(rho1, p1 - 1.0) * E12;
    pt.dyoungs[1] = r1p * dE12;
    const auto [g, dg] = mass_multiplier(s, rho1);
    pt.density = g * rho12;
    pt.ddensity[0] = dg * rho12;
    pt.ddensity[1] = g * (r1 - r2);
    return pt;
}

MaterialPoint interp_tri_void(const MaterialScheme& s, double rho1, double rho2, double rho3) {
    check_range(rho1, s.lower_bound(0), "tri-void channel 1");
    check_range(rho2, 0.0, "tri-void channel 2");
    check_range(rho3, 0.0, "tri-void channel 3");
    const double p1 = s.stiffness_penalty;
    const double E1 = s.youngs[0], E2 = s.youngs[1], E3 = s.youngs[2];
    const double r1 = s.densities[0], r2 = s.densities[1], r3 = s.densities[2];

    const double r3p = std::pow(rho3, p1);
    const double E12 = r3p * E1 + (1.0 - r3p) * E2;
    const double dE12 = p1 * std::pow(rho3, p1 - 1.0) * (E1 - E2);
    const double r2p = std::pow(rho2, p1);
    const double E123 = r2p * E12 + (1.0 - r2p) * E3;

    const double rho12 = rho3 * r1 + (1.0 - rho3) * r2;
    const double rho123 = rho2 * rho12 + (1.0 - rho2) * r3;

    MaterialPoint pt;
    const double r1p = std::pow(rho1, p1);
    pt.youngs = r1p * E123;
    pt.dyoungs[0] = p1 * std::pow(rho1, p1 - 1.0) * E123;
    pt.dyoungs[1] = r1p * p1 * std::pow(rho2, p1 - 1.0) * (E12 - E3);
    pt.dyoungs[2] = r1p * r2p * dE12;
    const auto [g, dg] = mass_multiplier(s, rho1);
    pt.density = g * rho123;
    pt.ddensity[0] = dg * rho123;
    pt.ddensity[1] = g * (rho12 - r3);
    pt.ddensity[2] = g * rho2 * (r1 - r2);
    return pt;
}

MaterialPoint evaluate_material(const MaterialScheme& s, const double* rho) {
    switch (s.kind) {
        case SchemeKind::SolidVoid: return interp_solid_void(s, rho[0]);
        case SchemeKind::BiMaterial: return interp_bi(s, rho[0]);
        case SchemeKind::BiVoid: return interp_bi_void(s, rho[0], rho[1]);
        case SchemeKind::TriVoid: return interp_tri_void(s, rho[0], rho[1], rho[2]);
    }
    throw DomainError("unreachable scheme kind");
}

}  // namespace etop
