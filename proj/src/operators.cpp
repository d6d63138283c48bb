#include "annulus/operators.hpp"

#include <cmath>
#include <vector>

#include <Eigen/SparseCholesky>

#include "annulus/errors.hpp"

namespace annulus {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

// Assembled Σ_e D_eᵀ diag(local weight · density) D_e for a composite rule.
Eigen::SparseMatrix<double> panel_stiffness(const CompositeRule& rule, const std::vector<double>& density) {
    const std::size_t p = rule.points_per_panel;
    const double half = 0.5 * rule.panel_length();
    const double scale = 1.0 / half;
    Triplets trips;
    trips.reserve(rule.panels * p * p);
    for (std::size_t e = 0; e < rule.panels; ++e) {
        for (std::size_t a = 0; a < p; ++a) {
            for (std::size_t b = 0; b < p; ++b) {
                double acc = 0.0;
                for (std::size_t q = 0; q < p; ++q) {
                    const double wq = half * rule.reference.weights[q] * density[rule.index(e, q)];
                    acc += wq * rule.reference.diff[q * p + a] * rule.reference.diff[q * p + b];
                }
                if (acc != 0.0) trips.emplace_back(rule.index(e, a), rule.index(e, b), acc * scale * scale);
            }
        }
    }
    const auto n = static_cast<Eigen::Index>(rule.size());
    Eigen::SparseMatrix<double> m(n, n);
    m.setFromTriplets(trips.begin(), trips.end());
    return m;
}

Eigen::Map<const Eigen::VectorXd> as_vector(const Field2D& f) {
    return {f.values.data(), static_cast<Eigen::Index>(f.values.size())};
}

}  // namespace

struct StiffnessOperator::Factorization {
    Eigen::SparseMatrix<double> interior;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
};

StiffnessOperator::~StiffnessOperator() = default;
StiffnessOperator::StiffnessOperator(StiffnessOperator&&) noexcept = default;
StiffnessOperator& StiffnessOperator::operator=(StiffnessOperator&&) noexcept = default;

StiffnessOperator::StiffnessOperator(const Grid2D& grid, double lambda)
    : nr_(grid.nr()), nt_(grid.ntheta()), lambda_(lambda) {
    const int N = grid.annulus.N;
    std::vector<double> rho(nr_), rho_over_r2(nr_), cos_density(nt_);
    for (std::size_t i = 0; i < nr_; ++i) {
        const double r = grid.r_rule.nodes[i];
        rho[i] = std::pow(r, N - 1);
        rho_over_r2[i] = std::pow(r, N - 3);
    }
    for (std::size_t j = 0; j < nt_; ++j) {
        const double c = (j + 1 == nt_) ? 0.0 : std::cos(grid.theta_rule.nodes[j]);
        cos_density[j] = 2.0 * grid.omega * std::pow(c, N - 2);
    }
    const Eigen::SparseMatrix<double> Ar = panel_stiffness(grid.r_rule, rho);
    const Eigen::SparseMatrix<double> At = panel_stiffness(grid.theta_rule, cos_density);

    Triplets trips;
    trips.reserve(static_cast<std::size_t>(Ar.nonZeros()) * nt_ + static_cast<std::size_t>(At.nonZeros()) * nr_ +
                  nr_ * nt_);
    // u_r² term: Ar ⊗ diag(angular weights).
    for (Eigen::Index k = 0; k < Ar.outerSize(); ++k) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(Ar, k); it; ++it) {
            for (std::size_t j = 0; j < nt_; ++j) {
                const double w = grid.angular_weights[j];
                if (w != 0.0) {
                    trips.emplace_back(grid.index(it.row(), j), grid.index(it.col(), j), it.value() * w);
                }
            }
        }
    }
    // u_θ²/r² term: diag(r-weights · r^{N-3}) ⊗ At.
    for (Eigen::Index k = 0; k < At.outerSize(); ++k) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(At, k); it; ++it) {
            for (std::size_t i = 0; i < nr_; ++i) {
                const double w = grid.r_rule.weights[i] * rho_over_r2[i];
                trips.emplace_back(grid.index(i, it.row()), grid.index(i, it.col()), it.value() * w);
            }
        }
    }
    if (lambda_ != 0.0) {
        for (std::size_t k = 0; k < nr_ * nt_; ++k) {
            if (grid.quad_weights[k] != 0.0) trips.emplace_back(k, k, lambda_ * grid.quad_weights[k]);
        }
    }
    const auto n = static_cast<Eigen::Index>(nr_ * nt_);
    K_.resize(n, n);
    K_.setFromTriplets(trips.begin(), trips.end());
}

Field2D StiffnessOperator::apply(const Field2D& u) const {
    if (u.nr != nr_ || u.ntheta != nt_) throw DomainError("StiffnessOperator::apply: shape mismatch");
    Field2D out(nr_, nt_);
    Eigen::Map<Eigen::VectorXd>(out.values.data(), static_cast<Eigen::Index>(out.size())) = K_ * as_vector(u);
    return out;
}

double StiffnessOperator::inner(const Field2D& u, const Field2D& v) const {
    if (u.nr != nr_ || u.ntheta != nt_ || v.nr != nr_ || v.ntheta != nt_) {
        throw DomainError("StiffnessOperator::inner: shape mismatch");
    }
    const Eigen::VectorXd Kv = K_ * as_vector(v);
    return as_vector(u).dot(Kv);
}

Field2D StiffnessOperator::solve(const Field2D& rhs) const {
    if (rhs.nr != nr_ || rhs.ntheta != nt_) throw DomainError("StiffnessOperator::solve: shape mismatch");
    const auto interior = static_cast<Eigen::Index>((nr_ - 2) * nt_);
    const auto offset = static_cast<Eigen::Index>(nt_);
    if (!factor_) {
        auto f = std::make_unique<Factorization>();
        f->interior = K_.block(offset, offset, interior, interior);
        f->ldlt.compute(f->interior);
        if (f->ldlt.info() != Eigen::Success) throw DomainError("StiffnessOperator: factorization failed");
        factor_ = std::move(f);
    }
    const Eigen::VectorXd b = as_vector(rhs).segment(offset, interior);
    const Eigen::VectorXd x = factor_->ldlt.solve(b);
    Field2D out(nr_, nt_);
    Eigen::Map<Eigen::VectorXd>(out.values.data() + offset, interior) = x;
    return out;
}

}  // namespace annulus
