#pragma once

#include <memory>

#include <Eigen/SparseCore>

#include "annulus/geometry.hpp"

namespace annulus {

/// The discrete quadratic form ∫ (u_r² + u_θ²/r² + λ u²) dx on a Grid2D.
///
/// Derivatives are taken panel-wise by polynomial differentiation on the
/// Lobatto nodes and squared at the quadrature points of each panel, so the
/// form is the exact quadrature of the piecewise-polynomial interpolant's
/// gradient energy. The matrix is symmetric and acts on all nodes; `solve`
/// works on the interior r-rows (Dirichlet rows fixed at zero).
class StiffnessOperator {
public:
    StiffnessOperator(const Grid2D& grid, double lambda);
    explicit StiffnessOperator(const Grid2D& grid) : StiffnessOperator(grid, grid.annulus.lambda) {}
    ~StiffnessOperator();
    StiffnessOperator(StiffnessOperator&&) noexcept;
    StiffnessOperator& operator=(StiffnessOperator&&) noexcept;

    double lambda() const { return lambda_; }
    const Eigen::SparseMatrix<double>& matrix() const { return K_; }

    /// K u.
    Field2D apply(const Field2D& u) const;
    /// uᵀ K v.
    double inner(const Field2D& u, const Field2D& v) const;
    double quadratic(const Field2D& u) const { return inner(u, u); }

    /// Solves K x = rhs on interior r-rows; boundary rows of x are zero and the
    /// boundary rows of rhs are ignored. Factorizes on first use.
    Field2D solve(const Field2D& rhs) const;

private:
    struct Factorization;
    std::size_t nr_ = 0;
    std::size_t nt_ = 0;
    double lambda_ = 0.0;
    Eigen::SparseMatrix<double> K_;
    mutable std::unique_ptr<Factorization> factor_;
};

}  // namespace annulus
