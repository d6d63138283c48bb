#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "annulus/geometry.hpp"

namespace annulus {

/// ∫ (e^{(u/k)²} - 1) dx, or ∫ (e^{α u²} - 1) dx from tm_probe.
struct ModulusResult {
    double alpha = 0.0;  // exponent factor, 1/k²
    double value = 0.0;
    bool saturated = false;  // some nodal exponent was clamped at the double range
};

struct LuxemburgResult {
    double norm = 0.0;
    std::pair<double, double> bracket{0.0, 0.0};
    double modulus_at_norm = 0.0;
};

/// Nodal exponents above this are clamped (and flagged).
inline constexpr double kMaxExponent = 709.0;

ModulusResult modulus(const Field2D& field, const Grid2D& grid, double k);
/// Same integral parameterized by α = 1/k².
ModulusResult modulus_alpha(const Field2D& field, const Grid2D& grid, double alpha);

/// inf{k > 0 : modulus(u, k) <= 1} to relative tolerance `tol` in (0, 1e-3].
/// The returned norm is the upper end of the final bracket, so the modulus there
/// never exceeds 1. Throws SolverError::BracketExpansion if no admissible lower
/// bracket is found.
LuxemburgResult luxemburg_norm(const Field2D& field, const Grid2D& grid, double tol = 1e-10);

struct TMProbeSummary {
    double alpha = 0.0;
    double max_modulus = 0.0;
    double mean_modulus = 0.0;
    int saturated_count = 0;
    int sample_count = 0;
    std::vector<double> values;  // one per sample, in sample order
};

/// Random cone fields (see random_cone_field) normalized to unit discrete H¹(A)
/// norm, then ∫ (e^{α u²} - 1). Sample k uses a seed derived from (seed, k).
TMProbeSummary tm_probe(const Grid2D& grid, double alpha, int sample_count, std::uint64_t seed);

}  // namespace annulus
