#include "annulus/stability.hpp"

#include <cmath>
#include <numbers>

#include "annulus/errors.hpp"
#include "annulus/operators.hpp"

namespace annulus {

double hardy_constant(const AnnulusSpec& annulus) {
    const double k = 0.5 * (annulus.N - 2);
    return k * k + annulus.lambda * annulus.R0 * annulus.R0;
}

AngularMode angular_mode(int N, std::size_t ntheta, QuadratureRule rule) {
    if (N < 3) throw DomainError("angular_mode: N must be >= 3");
    AngularMode mode;
    mode.N = N;
    mode.rule = composite_lobatto(0.0, std::numbers::pi / 2.0, std::max<std::size_t>(ntheta, 3), rule);
    const std::size_t n = mode.rule.size();
    mode.y.resize(n);
    mode.dy.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double t = mode.rule.nodes[j];
        const double s = std::sin(t);
        mode.y[j] = 1.0 - N * s * s;
        mode.dy[j] = -N * std::sin(2.0 * t);
    }
    mode.dy.front() = 0.0;
    mode.dy.back() = 0.0;
    mode.y.back() = 1.0 - N;
    return mode;
}

AngularResidual angular_residual(const AngularMode& mode) {
    const int N = mode.N;
    AngularResidual out;
    // ((cos θ)^{N-2} y')' = (N-2)(cos θ)^{N-3}(-sin θ) y' + (cos θ)^{N-2} y'' with y'' = -2N cos 2θ.
    for (std::size_t j = 1; j + 1 < mode.y.size(); ++j) {
        const double t = mode.rule.nodes[j];
        const double c = std::cos(t), s = std::sin(t);
        const double ypp = -2.0 * N * std::cos(2.0 * t);
        const double flux_prime = -(N - 2) * std::pow(c, N - 3) * s * mode.dy[j] + std::pow(c, N - 2) * ypp;
        const double r = std::abs(-flux_prime - 2.0 * N * std::pow(c, N - 2) * mode.y[j]);
        out.max_residual = std::max(out.max_residual, r);
    }
    out.dy_start = std::abs(mode.dy.front());
    out.dy_end = std::abs(mode.dy.back());
    return out;
}

AngularIntegrals angular_integrals(const AngularMode& mode) {
    AngularIntegrals out;
    CompensatedSum a, b, c;
    const std::size_t n = mode.y.size();
    for (std::size_t j = 0; j < n; ++j) {
        const double w = (j + 1 == n) ? 0.0 : mode.rule.weights[j] * std::pow(std::cos(mode.rule.nodes[j]), mode.N - 2);
        a.add(w * mode.y[j]);
        b.add(w * mode.y[j] * mode.y[j]);
        c.add(w * mode.dy[j] * mode.dy[j]);
    }
    out.y = a.value();
    out.y2 = b.value();
    out.dy2 = c.value();
    return out;
}

double stability_indicator(const RadialProfile& p, const NonlinearitySpec& nonlin, const AnnulusSpec& annulus) {
    const std::size_t n = p.size();
    std::vector<double> integrand(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = p.r[i], u = p.u[i];
        const double f = eval_f(nonlin, r, u);
        const double df = eval_dfds(nonlin, r, u);
        integrand[i] = ((f - u * df) * u + 2.0 * annulus.N * u * u / (r * r)) * std::pow(r, annulus.N - 1);
    }
    return simpson_uniform(integrand, p.spacing());
}

double second_variation_2d(const Field2D& u2d, const Field2D& v2d, const Grid2D& grid, const NonlinearitySpec& nonlin,
                           const AnnulusSpec& annulus) {
    if (!u2d.matches(grid) || !v2d.matches(grid)) throw DomainError("second_variation_2d: dimension mismatch");
    const StiffnessOperator K(grid, annulus.lambda);
    double q = K.quadratic(v2d);
    CompensatedSum potential;
    for (std::size_t i = 0; i < grid.nr(); ++i) {
        const double r = grid.r_rule.nodes[i];
        for (std::size_t j = 0; j < grid.ntheta(); ++j) {
            const std::size_t k = grid.index(i, j);
            if (grid.quad_weights[k] == 0.0) continue;
            potential.add(grid.quad_weights[k] * eval_dfds(nonlin, r, u2d.values[k]) * v2d.values[k] * v2d.values[k]);
        }
    }
    return q - potential.value();
}

Field2D breaking_direction(const RadialProfile& profile, const Grid2D& grid) {
    Field2D v = lift(profile, grid);
    const int N = grid.annulus.N;
    for (std::size_t j = 0; j < grid.ntheta(); ++j) {
        const double s = std::sin(grid.theta_rule.nodes[j]);
        const double y = (j + 1 == grid.ntheta()) ? 1.0 - N : 1.0 - N * s * s;
        for (std::size_t i = 0; i < grid.nr(); ++i) v(i, j) *= y;
    }
    return v;
}

std::string to_string(Verdict v) { return v == Verdict::Breaking ? "Breaking" : "Inconclusive"; }

StabilityReport symmetry_breaking_report(const AnnulusSpec& annulus, const NonlinearitySpec& nonlin,
                                         const RadialProfile& profile, const Grid2D* grid,
                                         std::size_t angular_nodes) {
    StabilityReport rep;
    rep.H = hardy_constant(annulus);
    rep.delta_required = 2.0 * annulus.N / rep.H + 1.0;
    rep.delta_certified = assumption_report(nonlin, annulus, 100).delta_max;
    rep.sufficient_condition = annulus.lambda > 0.0 ? rep.delta_certified >= rep.delta_required
                                                    : rep.delta_certified > rep.delta_required;
    rep.D = stability_indicator(profile, nonlin, annulus);
    const AngularMode mode = angular_mode(annulus.N, angular_nodes);
    rep.angular_factor = angular_integrals(mode).y2;
    rep.second_variation = 2.0 * sphere_surface(annulus.N - 2) * rep.D * rep.angular_factor;
    rep.verdict = rep.second_variation < 0.0 ? Verdict::Breaking : Verdict::Inconclusive;
    if (grid != nullptr) {
        const Field2D u2d = lift(profile, *grid);
        const Field2D v2d = breaking_direction(profile, *grid);
        const double sv = second_variation_2d(u2d, v2d, *grid, nonlin, annulus);
        rep.second_variation_2d = sv;
        rep.cross_check = std::abs(sv - rep.second_variation) / std::abs(sv);
    }
    return rep;
}

}  // namespace annulus
