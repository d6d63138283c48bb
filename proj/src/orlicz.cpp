#include "annulus/orlicz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "annulus/conevar.hpp"
#include "annulus/errors.hpp"
#include "annulus/operators.hpp"
#include "annulus/quadrature.hpp"

namespace annulus {

ModulusResult modulus_alpha(const Field2D& field, const Grid2D& grid, double alpha) {
    if (!field.matches(grid)) throw DomainError("modulus: dimension mismatch");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("modulus: exponent factor must be positive");
    ModulusResult out;
    out.alpha = alpha;
    CompensatedSum s;
    for (std::size_t k = 0; k < field.size(); ++k) {
        const double w = grid.quad_weights[k];
        if (w == 0.0) continue;
        const double u = field.values[k];
        if (!std::isfinite(u)) throw DomainError("modulus: non-finite field value");
        double e = alpha * u * u;
        if (e > kMaxExponent) {
            e = kMaxExponent;
            out.saturated = true;
        }
        s.add(w * std::expm1(e));
    }
    out.value = s.value();
    // Summing clamped terms can still overflow.
    if (!std::isfinite(out.value)) {
        out.value = std::numeric_limits<double>::max();
        out.saturated = true;
    }
    return out;
}

ModulusResult modulus(const Field2D& field, const Grid2D& grid, double k) {
    if (!(k > 0.0)) throw DomainError("modulus: k must be positive");
    return modulus_alpha(field, grid, 1.0 / (k * k));
}

LuxemburgResult luxemburg_norm(const Field2D& field, const Grid2D& grid, double tol) {
    if (!(tol > 0.0 && tol <= 1e-3)) throw DomainError("luxemburg_norm: tol must lie in (0, 1e-3]");
    if (!field.matches(grid)) throw DomainError("luxemburg_norm: dimension mismatch");
    LuxemburgResult out;
    // Only nodes with positive weight contribute.
    double sup = 0.0;
    for (std::size_t k = 0; k < field.size(); ++k) {
        if (grid.quad_weights[k] != 0.0) sup = std::max(sup, std::abs(field.values[k]));
    }
    if (sup == 0.0) return out;

    double measure = 0.0;
    for (double w : grid.quad_weights) measure += w;
    // A constant field of height sup has modulus exactly 1 here.
    double hi = sup / std::sqrt(std::log1p(1.0 / measure));
    const auto too_small = [&](double k) {
        const ModulusResult m = modulus(field, grid, k);
        return m.saturated || m.value > 1.0;
    };
    while (too_small(hi)) hi *= 1.0 + 1e-12;  // guards the rounding of the estimate
    double lo = 0.5 * hi;
    int halvings = 0;
    while (!too_small(lo)) {
        hi = lo;
        lo *= 0.5;
        if (++halvings > 1100 || lo == 0.0) {
            throw SolverError(SolverError::Kind::BracketExpansion, "luxemburg_norm: no lower bracket found");
        }
    }
    while (hi - lo > tol * hi) {
        const double mid = 0.5 * (lo + hi);
        (too_small(mid) ? lo : hi) = mid;
    }
    out.norm = hi;
    out.bracket = {lo, hi};
    out.modulus_at_norm = modulus(field, grid, hi).value;
    return out;
}

TMProbeSummary tm_probe(const Grid2D& grid, double alpha, int sample_count, std::uint64_t seed) {
    if (!(alpha > 0.0)) throw DomainError("tm_probe: alpha must be positive");
    if (sample_count < 10) throw DomainError("tm_probe: sample_count must be at least 10");
    const StiffnessOperator h1(grid, 1.0);
    TMProbeSummary out;
    out.alpha = alpha;
    out.sample_count = sample_count;
    double total = 0.0;
    for (int k = 0; k < sample_count; ++k) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(k)};
        std::mt19937_64 derive(seq);
        Field2D u = random_cone_field(grid, derive());
        const double norm = std::sqrt(h1.quadratic(u));
        double value = 0.0;
        if (norm > 0.0) {
            u *= 1.0 / norm;
            const ModulusResult m = modulus_alpha(u, grid, alpha);
            value = m.value;
            if (m.saturated) ++out.saturated_count;
        }
        out.values.push_back(value);
        out.max_modulus = std::max(out.max_modulus, value);
        total += value;
    }
    out.mean_modulus = total / sample_count;
    return out;
}

}  // namespace annulus
