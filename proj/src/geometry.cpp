#include "annulus/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "annulus/errors.hpp"

namespace annulus {

void AnnulusSpec::validate() const {
    if (N < 3) throw DomainError("annulus.N must be >= 3 (got " + std::to_string(N) + ")");
    if (!(R0 > 0.0) || !std::isfinite(R0)) throw DomainError("annulus.R0 must be > 0");
    if (!(R1 > R0) || !std::isfinite(R1)) throw DomainError("annulus.R1 must be finite and > R0");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("annulus.lambda must be >= 0");
    if (truncated && !(lambda > 0.0)) {
        throw DomainError("annulus.lambda must be > 0 for a truncated (unbounded) annulus");
    }
}

double AnnulusSpec::volume() const {
    return sphere_surface(N - 1) * (std::pow(R1, N) - std::pow(R0, N)) / N;
}

double sphere_surface(int m) {
    if (m < 1) throw DomainError("sphere_surface: m must be >= 1");
    const double k = 0.5 * (m + 1);
    return 2.0 * std::pow(std::numbers::pi, k) / std::tgamma(k);
}

double Field2D::max_abs() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

Field2D& Field2D::operator+=(const Field2D& other) {
    if (other.nr != nr || other.ntheta != ntheta) throw DomainError("Field2D: shape mismatch");
    for (std::size_t k = 0; k < values.size(); ++k) values[k] += other.values[k];
    return *this;
}

Field2D& Field2D::operator-=(const Field2D& other) {
    if (other.nr != nr || other.ntheta != ntheta) throw DomainError("Field2D: shape mismatch");
    for (std::size_t k = 0; k < values.size(); ++k) values[k] -= other.values[k];
    return *this;
}

Field2D& Field2D::operator*=(double s) {
    for (double& v : values) v *= s;
    return *this;
}

Field2D operator+(Field2D a, const Field2D& b) { return a += b; }
Field2D operator-(Field2D a, const Field2D& b) { return a -= b; }
Field2D operator*(double s, Field2D a) { return a *= s; }

Grid2D build_grid(const AnnulusSpec& spec, std::size_t nr, std::size_t ntheta, QuadratureRule rule) {
    spec.validate();
    if (nr < 8 || ntheta < 8) throw DomainError("build_grid: nr and ntheta must be >= 8");

    Grid2D grid;
    grid.annulus = spec;
    grid.r_rule = composite_lobatto(spec.R0, spec.R1, nr, rule);
    grid.theta_rule = composite_lobatto(0.0, std::numbers::pi / 2.0, ntheta, rule);
    grid.omega = sphere_surface(spec.N - 2);

    const std::size_t n_r = grid.nr();
    const std::size_t n_t = grid.ntheta();
    grid.radial_weights.resize(n_r);
    for (std::size_t i = 0; i < n_r; ++i) {
        grid.radial_weights[i] = grid.r_rule.weights[i] * std::pow(grid.r_rule.nodes[i], spec.N - 1);
    }
    grid.angular_weights.resize(n_t);
    for (std::size_t j = 0; j < n_t; ++j) {
        const double c = (j + 1 == n_t) ? 0.0 : std::cos(grid.theta_rule.nodes[j]);
        grid.angular_weights[j] = 2.0 * grid.omega * grid.theta_rule.weights[j] * std::pow(c, spec.N - 2);
    }
    grid.quad_weights.resize(n_r * n_t);
    for (std::size_t i = 0; i < n_r; ++i) {
        for (std::size_t j = 0; j < n_t; ++j) {
            grid.quad_weights[grid.index(i, j)] = grid.radial_weights[i] * grid.angular_weights[j];
        }
    }
    return grid;
}

double integrate(const Field2D& field, const Grid2D& grid) {
    if (!field.matches(grid) || grid.quad_weights.size() != field.size()) {
        throw DomainError("integrate: field and grid dimensions differ");
    }
    CompensatedSum sum;
    for (std::size_t k = 0; k < field.size(); ++k) sum.add(field.values[k] * grid.quad_weights[k]);
    return sum.value();
}

}  // namespace annulus
