#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "annulus/quadrature.hpp"

namespace annulus {

/// The annulus R0 < |x| < R1 in R^N together with the zeroth-order coefficient
/// lambda of -Δu + λu = f(x, u).
///
/// An unbounded annulus is modelled by a finite outer radius with
/// `truncated = true`; that case needs lambda > 0 so that solutions decay.
struct AnnulusSpec {
    int N = 3;
    double R0 = 1.0;
    double R1 = 2.0;
    double lambda = 0.0;
    bool truncated = false;

    /// Throws DomainError naming the offending field.
    void validate() const;
    double volume() const;
};

/// Surface measure of the unit m-sphere in R^{m+1}.
double sphere_surface(int m);

/// Tensor quadrature grid on (R0, R1) x (0, π/2) for the reduced variables
/// (r, θ), θ = arcsin(|x_N| / r). The weight 2 ω_{N-2} (cos θ)^{N-2} r^{N-1}
/// is folded into `quad_weights`, so sum(values * quad_weights) approximates the
/// N-dimensional integral over the annulus.
struct Grid2D {
    AnnulusSpec annulus;
    CompositeRule r_rule;
    CompositeRule theta_rule;
    double omega = 0.0;  // ω_{N-2}

    /// r^{N-1} times the r-rule weight, per r-node.
    std::vector<double> radial_weights;
    /// 2 ω_{N-2} (cos θ)^{N-2} times the θ-rule weight, per θ-node. Zero at θ = π/2.
    std::vector<double> angular_weights;
    /// Row-major (r outer, θ inner) product of the two.
    std::vector<double> quad_weights;

    std::size_t nr() const { return r_rule.size(); }
    std::size_t ntheta() const { return theta_rule.size(); }
    std::size_t size() const { return nr() * ntheta(); }
    std::size_t index(std::size_t i, std::size_t j) const { return i * ntheta() + j; }
    std::span<const double> r_nodes() const { return r_rule.nodes; }
    std::span<const double> theta_nodes() const { return theta_rule.nodes; }
};

/// Nodal values on a Grid2D, row-major with r as the outer index.
struct Field2D {
    std::size_t nr = 0;
    std::size_t ntheta = 0;
    std::vector<double> values;

    Field2D() = default;
    Field2D(std::size_t nr_, std::size_t ntheta_, double fill = 0.0)
        : nr(nr_), ntheta(ntheta_), values(nr_ * ntheta_, fill) {}
    explicit Field2D(const Grid2D& grid, double fill = 0.0) : Field2D(grid.nr(), grid.ntheta(), fill) {}

    double& operator()(std::size_t i, std::size_t j) { return values[i * ntheta + j]; }
    double operator()(std::size_t i, std::size_t j) const { return values[i * ntheta + j]; }
    std::size_t size() const { return values.size(); }
    bool matches(const Grid2D& grid) const { return nr == grid.nr() && ntheta == grid.ntheta(); }
    double max_abs() const;

    Field2D& operator+=(const Field2D& other);
    Field2D& operator-=(const Field2D& other);
    Field2D& operator*=(double s);
};

Field2D operator+(Field2D a, const Field2D& b);
Field2D operator-(Field2D a, const Field2D& b);
Field2D operator*(double s, Field2D a);

/// Builds the grid. nr and ntheta are minimum node counts (>= 8); the actual
/// counts are rounded up to fill whole panels of the chosen rule.
Grid2D build_grid(const AnnulusSpec& spec, std::size_t nr, std::size_t ntheta,
                  QuadratureRule rule = QuadratureRule::Lobatto5);

/// Discrete ∫_A u dx with compensated summation.
double integrate(const Field2D& field, const Grid2D& grid);

/// Field sampled from g(r, θ) at the grid nodes.
template <typename Fn>
Field2D sample(const Grid2D& grid, Fn&& g) {
    Field2D out(grid);
    for (std::size_t i = 0; i < grid.nr(); ++i) {
        for (std::size_t j = 0; j < grid.ntheta(); ++j) {
            out(i, j) = g(grid.r_rule.nodes[i], grid.theta_rule.nodes[j]);
        }
    }
    return out;
}

}  // namespace annulus
