#include "annulus/nonlinearity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "annulus/errors.hpp"
#include "annulus/stability.hpp"

namespace annulus {

namespace {

// Largest argument accepted by the exponential family before reporting saturation.
constexpr double kExpArgLimit = 700.0;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// T_m(x) = exp_m(x) / x^m = sum_{i>=0} x^i / (m+i)!, for x >= 0.
double scaled_tail(int m, double x) {
    if (x <= m + 30.0) {
        double term = 1.0;
        for (int k = 2; k <= m; ++k) term /= k;
        double sum = term;
        for (int i = 1; i < 10000; ++i) {
            term *= x / (m + i);
            sum += term;
            if (term < 1e-18 * sum) break;
        }
        return sum;
    }
    if (x > kExpArgLimit) throw SaturationError("exp_m: argument exceeds the floating range");
    // e^x dominates the partial sum by a factor >= e^30 here.
    double partial = 0.0, term = 1.0;
    for (int i = 0; i < m; ++i) {
        partial += term;
        term *= x / (i + 1);
    }
    return (std::exp(x) - partial) / std::pow(x, m);
}

}  // namespace

double WeightSpec::operator()(double r) const {
    return std::visit(overloaded{[](const Constant& c) { return c.c; },
                                 [r](const RadialTabulated& t) {
                                     if (r <= t.r.front()) return t.w.front();
                                     if (r >= t.r.back()) return t.w.back();
                                     const auto it = std::upper_bound(t.r.begin(), t.r.end(), r);
                                     const std::size_t k = static_cast<std::size_t>(it - t.r.begin());
                                     const double a = (r - t.r[k - 1]) / (t.r[k] - t.r[k - 1]);
                                     return (1.0 - a) * t.w[k - 1] + a * t.w[k];
                                 }},
                      kind);
}

void WeightSpec::validate() const {
    std::visit(overloaded{[](const Constant& c) {
                              if (!(c.c > 0.0) || !std::isfinite(c.c)) {
                                  throw DomainError("weight: constant must be positive and finite");
                              }
                          },
                          [](const RadialTabulated& t) {
                              if (t.r.size() < 2 || t.r.size() != t.w.size()) {
                                  throw DomainError("weight: need >= 2 samples with matching r and w");
                              }
                              for (std::size_t k = 0; k < t.r.size(); ++k) {
                                  if (!(t.w[k] > 0.0) || !std::isfinite(t.w[k])) {
                                      throw DomainError("weight: samples must be positive and finite");
                                  }
                                  if (k > 0 && !(t.r[k] > t.r[k - 1])) {
                                      throw DomainError("weight: r samples must be strictly increasing");
                                  }
                              }
                          }},
               kind);
}

void NonlinearitySpec::validate() const {
    weight.validate();
    std::visit(overloaded{[](const Exponential& e) {
                              if (!(e.beta > 0.0 && e.beta < 2.0)) {
                                  throw DomainError("nonlinearity.beta must lie in (0, 2)");
                              }
                              if (e.m < 1 || e.m > 100) throw DomainError("nonlinearity.m must lie in [1, 100]");
                              if (!(e.beta * (e.m + 1) > 2.0)) {
                                  throw DomainError("nonlinearity: beta*(m+1) must exceed 2");
                              }
                          },
                          [](const Power& p) {
                              if (!(p.p > 2.0)) throw DomainError("nonlinearity.p must exceed 2");
                              if (!(p.pfrak >= p.p)) throw DomainError("nonlinearity.pfrak must be >= p");
                          },
                          [](const Linear& l) {
                              if (!std::isfinite(l.slope)) throw DomainError("nonlinearity.slope must be finite");
                          }},
               family);
}

std::string NonlinearitySpec::family_name() const {
    return std::visit(overloaded{[](const Exponential&) { return std::string("exponential"); },
                                 [](const Power&) { return std::string("power"); },
                                 [](const Linear&) { return std::string("linear"); }},
                      family);
}

double exp_m(int m, double s) {
    if (m < 0) throw DomainError("exp_m: m must be >= 0");
    if (!(s >= 0.0)) throw DomainError("exp_m: s must be >= 0");
    if (m == 0) {
        if (s > kExpArgLimit) throw SaturationError("exp_m: argument exceeds the floating range");
        return std::exp(s);
    }
    if (s == 0.0) return 0.0;
    return std::pow(s, m) * scaled_tail(m, s);
}

double eval_f(const NonlinearitySpec& spec, double r, double s) {
    if (s < 0.0) return -eval_f(spec, r, -s);
    if (s == 0.0) return 0.0;
    const double w = spec.weight(r);
    return std::visit(overloaded{[&](const Exponential& e) {
                                     const double x = std::pow(s, e.beta);
                                     if (x > kExpArgLimit) throw SaturationError("eval_f: s^beta too large");
                                     return w * std::pow(s, e.beta * (e.m + 1) - 1.0) * scaled_tail(e.m, x);
                                 },
                                 [&](const Power& p) {
                                     const double v = w * (std::pow(s, p.p - 1.0) + std::pow(s, p.pfrak - 1.0));
                                     if (!std::isfinite(v)) throw SaturationError("eval_f: power overflow");
                                     return v;
                                 },
                                 [&](const Linear& l) { return w * l.slope * s; }},
                      spec.family);
}

double eval_F(const NonlinearitySpec& spec, double r, double s) {
    s = std::abs(s);
    if (s == 0.0) return 0.0;
    const double w = spec.weight(r);
    return std::visit(overloaded{[&](const Exponential& e) {
                                     const double x = std::pow(s, e.beta);
                                     if (x > kExpArgLimit) throw SaturationError("eval_F: s^beta too large");
                                     return w / e.beta * std::pow(s, e.beta * (e.m + 1)) * scaled_tail(e.m + 1, x);
                                 },
                                 [&](const Power& p) {
                                     const double v = w * (std::pow(s, p.p) / p.p + std::pow(s, p.pfrak) / p.pfrak);
                                     if (!std::isfinite(v)) throw SaturationError("eval_F: power overflow");
                                     return v;
                                 },
                                 [&](const Linear& l) { return 0.5 * w * l.slope * s * s; }},
                      spec.family);
}

double eval_dfds(const NonlinearitySpec& spec, double r, double s) {
    s = std::abs(s);
    const double w = spec.weight(r);
    return std::visit(overloaded{[&](const Exponential& e) {
                                     // s^{β-2} exp_m = s^{β(m+1)-2} T_m and s^{2β-2} exp_{m-1} = s^{β(m+1)-2} T_{m-1};
                                     // the common power has a positive exponent, so the limit at 0 is 0.
                                     if (s == 0.0) return 0.0;
                                     const double x = std::pow(s, e.beta);
                                     if (x > kExpArgLimit) throw SaturationError("eval_dfds: s^beta too large");
                                     const double lead = std::pow(s, e.beta * (e.m + 1) - 2.0);
                                     return w * lead *
                                            ((e.beta - 1.0) * scaled_tail(e.m, x) + e.beta * scaled_tail(e.m - 1, x));
                                 },
                                 [&](const Power& p) {
                                     if (s == 0.0) return 0.0;
                                     const double v = w * ((p.p - 1.0) * std::pow(s, p.p - 2.0) +
                                                           (p.pfrak - 1.0) * std::pow(s, p.pfrak - 2.0));
                                     if (!std::isfinite(v)) throw SaturationError("eval_dfds: power overflow");
                                     return v;
                                 },
                                 [&](const Linear& l) { return w * l.slope; }},
                      spec.family);
}

double saturation_bound(const NonlinearitySpec& spec) {
    return std::visit(overloaded{[](const Exponential& e) { return std::pow(0.9 * kExpArgLimit, 1.0 / e.beta); },
                                 [](const Power& p) { return std::min(1e6, std::pow(10.0, 250.0 / p.pfrak)); },
                                 [](const Linear&) { return 1e6; }},
                      spec.family);
}

AssumptionReport assumption_report(const NonlinearitySpec& spec, const AnnulusSpec& annulus, int sample_count,
                                   double s_max) {
    spec.validate();
    annulus.validate();
    if (sample_count < 100) throw DomainError("assumption_report: sample_count must be >= 100");

    AssumptionReport rep;
    std::visit(overloaded{[&](const Exponential& e) {
                              rep.sigma = e.beta * (e.m + 1);
                              rep.delta_max = rep.sigma - 1.0;
                          },
                          [&](const Power& p) {
                              rep.sigma = p.p;
                              rep.delta_max = p.p - 1.0;
                          },
                          [&](const Linear&) {
                              rep.sigma = 2.0;
                              rep.delta_max = 1.0;
                          }},
               spec.family);
    rep.mu = rep.delta_max;
    rep.sample_count = sample_count;
    rep.s_min = 1e-6;
    rep.s_max = s_max > 0.0 ? s_max : saturation_bound(spec);

    constexpr double slack = 1e-10;
    const double lo = std::log(rep.s_min);
    const double hi = std::log(rep.s_max);
    const double radii[] = {annulus.R0, 0.5 * (annulus.R0 + annulus.R1), annulus.R1};
    double delta_inf = std::numeric_limits<double>::infinity();

    for (int k = 0; k < sample_count; ++k) {
        const double s = std::exp(lo + (hi - lo) * k / (sample_count - 1));
        for (double r : radii) {
            const double f = eval_f(spec, r, s);
            const double F = eval_F(spec, r, s);
            const double df = eval_dfds(spec, r, s);
            const double sf = s * f;
            if (!(sf > 0.0)) rep.sampled_violations.push_back({"f1", s, sf});
            if (sf - rep.sigma * F < -slack * std::abs(sf)) {
                rep.sampled_violations.push_back({"f3", s, sf / (rep.sigma * F)});
            }
            if (df < 0.0) rep.sampled_violations.push_back({"f8", s, df});
            const double sdf = s * df;
            if (sdf - rep.delta_max * f < -slack * std::abs(sdf)) {
                rep.sampled_violations.push_back({"f12", s, sdf / (rep.delta_max * f)});
            }
            if (f > 0.0) delta_inf = std::min(delta_inf, sdf / f);
        }
    }
    rep.sampled_delta_inf = delta_inf;
    return rep;
}

ThresholdVerdict threshold_check(const NonlinearitySpec& spec, const AnnulusSpec& annulus) {
    ThresholdVerdict v;
    v.H = hardy_constant(annulus);
    v.required = 2.0 + 2.0 * annulus.N / v.H;
    v.strict = !(annulus.lambda > 0.0);
    std::visit(overloaded{[&](const Exponential& e) {
                              v.actual = e.beta * (e.m + 1);
                              // Some β < 2 works iff 2(m+1) > required.
                              v.min_m = static_cast<int>(std::floor(v.required / 2.0 - 1.0)) + 1;
                              v.min_m = std::max(v.min_m, 1);
                              v.note = "beta(m+1) " + std::string(v.strict ? ">" : ">=") + " " +
                                       std::to_string(v.required) + " is reachable with beta < 2 only for m >= " +
                                       std::to_string(v.min_m);
                          },
                          [&](const Power& p) {
                              v.actual = p.p;
                              v.note = "p " + std::string(v.strict ? ">" : ">=") + " " + std::to_string(v.required);
                          },
                          [&](const Linear&) {
                              v.actual = 2.0;
                              v.note = "linear test nonlinearity is outside the superlinear families";
                          }},
               spec.family);
    v.satisfied = v.strict ? (v.actual > v.required) : (v.actual >= v.required);
    return v;
}

}  // namespace annulus
