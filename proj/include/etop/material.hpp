#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "etop/errors.hpp"

namespace etop {

enum class SchemeKind { SolidVoid, BiMaterial, BiVoid, TriVoid };

SchemeKind scheme_from_string(const std::string& kind);
std::string to_string(SchemeKind kind);

/// Interpolated element stiffness/mass coefficients with partial derivatives,
/// one slot per density channel of the owning scheme.
struct MaterialPoint {
    double youngs = 0.0;
    double density = 0.0;
    std::array<double, 3> dyoungs{0, 0, 0};
    std::array<double, 3> ddensity{0, 0, 0};
};

/// One of the four density-to-material interpolation laws. The below-threshold
/// mass branch uses coefficients (c1, c2) chosen so value and slope are
/// continuous at the threshold.
struct MaterialScheme {
    SchemeKind kind = SchemeKind::SolidVoid;
    std::vector<double> youngs;     // solid-phase moduli, one per material phase
    std::vector<double> densities;  // solid-phase mass densities
    double poisson = 0.3;
    double stiffness_penalty = 3.0;  // p1 (also p for the pure bi-material law)
    double mass_penalty = 6.0;       // p2
    double mass_threshold = 0.1;     // rho_T
    double c1 = 0.0;
    double c2 = 0.0;

    int channels() const;
    int phases() const;
    double lower_bound(int channel) const;  // rho_L of the channel

    static MaterialScheme make(SchemeKind kind, std::vector<double> youngs,
                               std::vector<double> densities, double poisson,
                               double stiffness_penalty = 3.0, double mass_penalty = 6.0,
                               double mass_threshold = 0.1);
};

/// Solves the 2x2 system that makes the below-threshold mass branch
/// C1-continuous at rho_T. Returns (c1, c2).
std::pair<double, double> continuity_coeffs(double mass_penalty, double mass_threshold);

MaterialPoint interp_solid_void(const MaterialScheme& scheme, double rho);
MaterialPoint interp_bi(const MaterialScheme& scheme, double rho);
MaterialPoint interp_bi_void(const MaterialScheme& scheme, double rho1, double rho2);
MaterialPoint interp_tri_void(const MaterialScheme& scheme, double rho1, double rho2, double rho3);

/// Dispatch on scheme kind; `rho` must carry channels() entries.
MaterialPoint evaluate_material(const MaterialScheme& scheme, const double* rho);

}  // namespace etop
