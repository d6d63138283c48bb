#pragma once

#include <optional>
#include <string>
#include <vector>

#include "annulus/geometry.hpp"
#include "annulus/nonlinearity.hpp"
#include "annulus/radial.hpp"

namespace annulus {

/// ((N-2)/2)² + λ R0².
double hardy_constant(const AnnulusSpec& annulus);

/// y(θ) = 1 - N sin²θ tabulated on a composite Lobatto θ-rule over [0, π/2].
struct AngularMode {
    int N = 3;
    CompositeRule rule;
    std::vector<double> y;
    std::vector<double> dy;

    std::span<const double> theta_nodes() const { return rule.nodes; }
};

AngularMode angular_mode(int N, std::size_t ntheta, QuadratureRule rule = QuadratureRule::Lobatto5);

struct AngularResidual {
    double max_residual = 0.0;  // max |-((cos θ)^{N-2} y')' - 2N (cos θ)^{N-2} y| over interior nodes
    double dy_start = 0.0;      // |y'(0)|
    double dy_end = 0.0;        // |y'(π/2)|
};

AngularResidual angular_residual(const AngularMode& mode);

/// Weighted angular integrals with weight (cos θ)^{N-2}.
struct AngularIntegrals {
    double y = 0.0;     // ∫ y
    double y2 = 0.0;    // ∫ y²  (the angular factor)
    double dy2 = 0.0;   // ∫ y'²
};

AngularIntegrals angular_integrals(const AngularMode& mode);

/// D = ∫ {[f(r,u) - u ∂_s f(r,u)] u + 2N u²/r²} r^{N-1} dr on the profile nodes.
double stability_indicator(const RadialProfile& profile, const NonlinearitySpec& nonlin, const AnnulusSpec& annulus);

/// ∫ (|∇v|² + λ v² - ∂_s f(r, u) v²) dx on the grid, |∇v|² = v_r² + v_θ²/r².
double second_variation_2d(const Field2D& u2d, const Field2D& v2d, const Grid2D& grid, const NonlinearitySpec& nonlin,
                           const AnnulusSpec& annulus);

/// u_rad(r) y(θ) on the grid.
Field2D breaking_direction(const RadialProfile& profile, const Grid2D& grid);

enum class Verdict { Breaking, Inconclusive };
std::string to_string(Verdict v);

struct StabilityReport {
    double H = 0.0;
    double delta_required = 0.0;   // 2N/H + 1
    double delta_certified = 0.0;  // from the assumption report
    bool sufficient_condition = false;  // delta_certified meets delta_required (strictly when λ = 0)
    double D = 0.0;
    double angular_factor = 0.0;   // ∫ y² (cos θ)^{N-2} dθ
    double second_variation = 0.0; // 2 ω_{N-2} D · angular_factor
    Verdict verdict = Verdict::Inconclusive;
    /// Independent evaluation on a 2D grid, when one was supplied.
    std::optional<double> second_variation_2d;
    std::optional<double> cross_check;  // |2D - 1D| / |2D|
};

/// Assembles the report. With a grid, also evaluates J''(u_rad)[u_rad y, u_rad y]
/// directly in 2D and records the discrepancy against the 1D product formula.
StabilityReport symmetry_breaking_report(const AnnulusSpec& annulus, const NonlinearitySpec& nonlin,
                                         const RadialProfile& profile, const Grid2D* grid = nullptr,
                                         std::size_t angular_nodes = 257);

}  // namespace annulus
