#include "annulus/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "annulus/errors.hpp"

namespace annulus {

QuadratureRule parse_rule(std::string_view tag) {
    if (tag == "gll3") return QuadratureRule::Lobatto3;
    if (tag == "gll5") return QuadratureRule::Lobatto5;
    if (tag == "gll7") return QuadratureRule::Lobatto7;
    throw DomainError("unknown quadrature rule tag '" + std::string(tag) +
                      "' (expected gll3, gll5 or gll7)");
}

std::string to_string(QuadratureRule rule) {
    return "gll" + std::to_string(static_cast<int>(rule));
}

namespace {

// Legendre P_n(x) and P_{n-1}(x) by the three-term recurrence.
std::pair<double, double> legendre(std::size_t n, double x) {
    double p0 = 1.0, p1 = x;
    if (n == 0) return {1.0, 0.0};
    for (std::size_t k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
        p0 = p1;
        p1 = pk;
    }
    return {p1, p0};
}

}  // namespace

ReferenceRule gauss_lobatto(std::size_t npoints) {
    if (npoints < 2) throw DomainError("gauss_lobatto: need at least 2 points");
    const std::size_t n = npoints - 1;
    ReferenceRule rule;
    rule.nodes.resize(npoints);
    rule.weights.resize(npoints);

    // Newton iteration on (1 - x^2) P_n'(x) starting from Chebyshev-Lobatto points.
    for (std::size_t i = 0; i < npoints; ++i) {
        double x = -std::cos(std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
        if (i == 0 || i == n) {
            rule.nodes[i] = x;
            continue;
        }
        for (int it = 0; it < 100; ++it) {
            auto [pn, pm] = legendre(n, x);
            const double dx = (x * pn - pm) / (static_cast<double>(npoints) * pn);
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        rule.nodes[i] = x;
    }
    // Exploit symmetry so that the rule is exactly mirror-symmetric.
    for (std::size_t i = 0; i < npoints / 2; ++i) {
        const double s = 0.5 * (rule.nodes[n - i] - rule.nodes[i]);
        rule.nodes[i] = -s;
        rule.nodes[n - i] = s;
    }
    if (npoints % 2 == 1) rule.nodes[n / 2] = 0.0;

    std::vector<double> pn(npoints);
    for (std::size_t i = 0; i < npoints; ++i) {
        pn[i] = legendre(n, rule.nodes[i]).first;
        rule.weights[i] = 2.0 / (static_cast<double>(n * npoints) * pn[i] * pn[i]);
    }

    rule.diff.assign(npoints * npoints, 0.0);
    for (std::size_t i = 0; i < npoints; ++i) {
        for (std::size_t j = 0; j < npoints; ++j) {
            if (i != j) {
                rule.diff[i * npoints + j] = pn[i] / (pn[j] * (rule.nodes[i] - rule.nodes[j]));
            }
        }
    }
    const double corner = static_cast<double>(n * npoints) / 4.0;
    rule.diff[0] = -corner;
    rule.diff[npoints * npoints - 1] = corner;
    return rule;
}

CompositeRule composite_lobatto(double a, double b, std::size_t min_nodes, QuadratureRule tag) {
    if (!(b > a)) throw DomainError("composite_lobatto: empty interval");
    const auto ppp = static_cast<std::size_t>(tag);
    if (ppp != 3 && ppp != 5 && ppp != 7) throw DomainError("composite_lobatto: invalid rule");
    const std::size_t step = ppp - 1;
    std::size_t panels = (min_nodes + step - 2) / step;  // ceil((min_nodes - 1) / step)
    if (panels < 1) panels = 1;

    CompositeRule rule;
    rule.a = a;
    rule.b = b;
    rule.panels = panels;
    rule.points_per_panel = ppp;
    rule.reference = gauss_lobatto(ppp);
    const std::size_t total = panels * step + 1;
    rule.nodes.assign(total, 0.0);
    rule.weights.assign(total, 0.0);
    const double h = (b - a) / static_cast<double>(panels);
    for (std::size_t e = 0; e < panels; ++e) {
        const double left = a + h * static_cast<double>(e);
        for (std::size_t k = 0; k < ppp; ++k) {
            const std::size_t g = rule.index(e, k);
            rule.nodes[g] = left + 0.5 * h * (rule.reference.nodes[k] + 1.0);
            rule.weights[g] += 0.5 * h * rule.reference.weights[k];
        }
    }
    rule.nodes.front() = a;
    rule.nodes.back() = b;
    return rule;
}

std::vector<double> differentiate(const CompositeRule& rule, std::span<const double> values) {
    if (values.size() != rule.size()) throw DomainError("differentiate: size mismatch");
    const std::size_t p = rule.points_per_panel;
    const double scale = 2.0 / rule.panel_length();
    std::vector<double> out(rule.size(), 0.0);
    std::vector<int> hits(rule.size(), 0);
    for (std::size_t e = 0; e < rule.panels; ++e) {
        for (std::size_t i = 0; i < p; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < p; ++j) {
                acc += rule.reference.diff[i * p + j] * values[rule.index(e, j)];
            }
            out[rule.index(e, i)] += scale * acc;
            ++hits[rule.index(e, i)];
        }
    }
    for (std::size_t g = 0; g < out.size(); ++g) out[g] /= hits[g];
    return out;
}

double simpson_uniform(std::span<const double> y, double h) {
    const std::size_t n = y.size();
    if (n < 2) return 0.0;
    if (n == 2) return 0.5 * h * (y[0] + y[1]);
    const std::size_t intervals = n - 1;
    std::size_t simpson_end = intervals;  // index of last node covered by plain Simpson
    double tail = 0.0;
    if (intervals % 2 == 1) {
        if (intervals < 3) return 0.5 * h * (y[0] + 2.0 * y[1] + y[2]);
        simpson_end = intervals - 3;
        const std::size_t k = simpson_end;
        tail = 3.0 * h / 8.0 * (y[k] + 3.0 * y[k + 1] + 3.0 * y[k + 2] + y[k + 3]);
    }
    CompensatedSum sum;
    for (std::size_t i = 0; i + 2 <= simpson_end; i += 2) {
        sum.add(h / 3.0 * (y[i] + 4.0 * y[i + 1] + y[i + 2]));
    }
    sum.add(tail);
    return sum.value();
}

void CompensatedSum::add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
        comp_ += (sum_ - t) + x;
    } else {
        comp_ += (x - t) + sum_;
    }
    sum_ = t;
}

}  // namespace annulus
