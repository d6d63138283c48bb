#pragma once

#include <string>
#include <vector>

#include "annulus/geometry.hpp"
#include "annulus/nonlinearity.hpp"

namespace annulus {

/// Samples of a radial profile u(r) on a uniform grid spanning [R0, R1].
struct RadialProfile {
    std::vector<double> r;
    std::vector<double> u;
    std::vector<double> du;
    double residual_inf = 0.0;  // max discrete ODE residual relative to max(1, max |f(r,u)|)
    double energy = 0.0;        // J of the radial function on the full annulus
    double slope = 0.0;         // u'(R0) of the bracketing shot
    int newton_iterations = 0;

    std::size_t size() const { return r.size(); }
    double spacing() const { return r.size() > 1 ? (r.back() - r.front()) / (r.size() - 1.0) : 0.0; }
    /// Cubic Hermite interpolation of u (and u') from the samples.
    double value_at(double x) const;
    double derivative_at(double x) const;
};

struct RadialOptions {
    double tol = 1e-9;  // on residual_inf
    int max_newton = 60;
    double slope_min = 1e-3;
    double slope_max = 1e3;
    int slope_ladder = 61;       // geometric ladder size
    double shoot_tol = 1e-12;    // odeint abs/rel tolerance
    int bisection_steps = 200;
};

/// Positive solution of -u'' - (N-1)/r u' + λu = f(r, u), u(R0) = u(R1) = 0.
///
/// Shooting from (u, u')(R0) = (0, s) over a geometric slope ladder brackets the
/// first slope at which the first positive arc ends exactly at R1; bisection
/// locates it and the shot seeds a Newton solve of a fourth-order (Numerov)
/// discretization of the equation for v = r^{(N-1)/2} u on n_nodes uniform nodes.
/// Throws SolverError::NoBracket or SolverError::NewtonDiverged.
RadialProfile solve_radial(const AnnulusSpec& annulus, const NonlinearitySpec& nonlin, std::size_t n_nodes,
                           const RadialOptions& opts = {});

/// Builds a profile from samples (u and du given); energy and residual are not set.
RadialProfile make_profile(std::vector<double> r, std::vector<double> u, std::vector<double> du);

/// ω_{N-1} ∫ (½(u'² + λu²) - F(r,u)) r^{N-1} dr.
double radial_energy(const RadialProfile& profile, const NonlinearitySpec& nonlin, const AnnulusSpec& annulus);

/// |∫(u'² + λu²) r^{N-1} - ∫ u f(r,u) r^{N-1}| / max(1, |∫ u f r^{N-1}|).
double radial_identity_residual(const RadialProfile& profile, const NonlinearitySpec& nonlin,
                                const AnnulusSpec& annulus);

/// ∫(u'² + λu²) r^{N-1} dr / ∫ u² r^{N-3} dr; bounded below by the Hardy constant.
double hardy_ratio(const RadialProfile& profile, const AnnulusSpec& annulus);

/// The profile as a θ-independent field on the grid.
Field2D lift(const RadialProfile& profile, const Grid2D& grid);

}  // namespace annulus
