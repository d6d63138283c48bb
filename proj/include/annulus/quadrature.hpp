#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace annulus {

/// Composite Gauss-Lobatto-Legendre rules. The tag is the number of points
/// per panel; panel endpoints are shared with the neighbouring panel.
enum class QuadratureRule { Lobatto3 = 3, Lobatto5 = 5, Lobatto7 = 7 };

QuadratureRule parse_rule(std::string_view tag);
std::string to_string(QuadratureRule rule);

/// Reference GLL nodes and weights on [-1, 1].
struct ReferenceRule {
    std::vector<double> nodes;
    std::vector<double> weights;
    /// Row-major differentiation matrix: (D u)_i = sum_j D[i*n + j] u_j.
    std::vector<double> diff;

    std::size_t size() const { return nodes.size(); }
};

ReferenceRule gauss_lobatto(std::size_t npoints);

/// A composite rule on [a, b] made of equal panels.
struct CompositeRule {
    double a = 0.0;
    double b = 0.0;
    std::size_t panels = 0;
    std::size_t points_per_panel = 0;
    std::vector<double> nodes;    // global, strictly increasing, includes a and b
    std::vector<double> weights;  // assembled global weights
    ReferenceRule reference;

    std::size_t size() const { return nodes.size(); }
    double panel_length() const { return (b - a) / static_cast<double>(panels); }
    /// Global index of local node `local` in panel `panel`.
    std::size_t index(std::size_t panel, std::size_t local) const {
        return panel * (points_per_panel - 1) + local;
    }
};

/// Builds a composite rule with at least `min_nodes` nodes.
CompositeRule composite_lobatto(double a, double b, std::size_t min_nodes, QuadratureRule rule);

/// Panel-wise polynomial derivative of nodal values. At shared panel
/// endpoints the two one-sided values are averaged.
std::vector<double> differentiate(const CompositeRule& rule, std::span<const double> values);

/// Composite Simpson on a uniform grid with spacing h; an even number of
/// intervals is required for the plain rule, otherwise the last three intervals
/// use the 3/8 rule.
double simpson_uniform(std::span<const double> y, double h);

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double x);
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

}  // namespace annulus
