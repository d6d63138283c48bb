#pragma once

#include <string>
#include <variant>
#include <vector>

#include "annulus/geometry.hpp"

namespace annulus {

/// Positive radial weight w(r). Tabulated weights are linearly interpolated
/// and held constant outside the sample range.
struct WeightSpec {
    struct Constant {
        double c = 1.0;
    };
    struct RadialTabulated {
        std::vector<double> r;
        std::vector<double> w;
    };
    std::variant<Constant, RadialTabulated> kind = Constant{};

    static WeightSpec constant(double c) { return WeightSpec{Constant{c}}; }
    static WeightSpec tabulated(std::vector<double> r, std::vector<double> w) {
        return WeightSpec{RadialTabulated{std::move(r), std::move(w)}};
    }

    double operator()(double r) const;
    bool is_constant() const { return std::holds_alternative<Constant>(kind); }
    void validate() const;
};

/// w(x) |s|^{β-2} s exp_m(|s|^β), with β ∈ (0, 2), m >= 1 and β(m+1) > 2.
struct Exponential {
    double beta = 1.5;
    int m = 1;
};

/// w(x) (|s|^{p-2} s + |s|^{𝔭-2} s), with 2 < p <= 𝔭.
struct Power {
    double p = 3.0;
    double pfrak = 3.0;
};

/// w(x) · slope · s. Not part of the superlinear families; used to exercise
/// solver failure paths and the sign logic of the stability indicator.
struct Linear {
    double slope = 0.0;
};

struct NonlinearitySpec {
    std::variant<Exponential, Power, Linear> family = Power{};
    WeightSpec weight{};

    static NonlinearitySpec exponential(double beta, int m, WeightSpec w = {}) {
        return {Exponential{beta, m}, std::move(w)};
    }
    static NonlinearitySpec power(double p, double pfrak, WeightSpec w = {}) {
        return {Power{p, pfrak}, std::move(w)};
    }
    static NonlinearitySpec linear(double slope, WeightSpec w = {}) {
        return {Linear{slope}, std::move(w)};
    }

    void validate() const;
    std::string family_name() const;
    bool is_superlinear() const { return !std::holds_alternative<Linear>(family); }
};

/// e^s - sum_{i<m} s^i / i!. Tail series for small s, subtraction for large s.
double exp_m(int m, double s);

double eval_f(const NonlinearitySpec& spec, double r, double s);
double eval_F(const NonlinearitySpec& spec, double r, double s);
double eval_dfds(const NonlinearitySpec& spec, double r, double s);

/// Largest s at which eval_F stays comfortably inside the floating range.
double saturation_bound(const NonlinearitySpec& spec);

struct AssumptionViolation {
    std::string condition;  // "f1", "f3", "f8" or "f12"
    double s = 0.0;
    double ratio = 0.0;     // left side over right side of the violated inequality
};

struct AssumptionReport {
    double sigma = 0.0;      // Ambrosetti-Rabinowitz exponent
    double delta_max = 0.0;  // certified δ in s ∂_s f >= δ f
    double mu = 0.0;         // small-s growth exponent, right end of the admissible range
    double sampled_delta_inf = 0.0;  // min over samples of s ∂_s f / f (informational)
    double s_min = 0.0;
    double s_max = 0.0;
    int sample_count = 0;
    std::vector<AssumptionViolation> sampled_violations;
};

/// Samples s on a log grid over (1e-6, s_max] at r ∈ {R0, mid, R1}. s_max <= 0
/// selects saturation_bound(spec).
AssumptionReport assumption_report(const NonlinearitySpec& spec, const AnnulusSpec& annulus,
                                   int sample_count, double s_max = 0.0);

struct ThresholdVerdict {
    double H = 0.0;
    double required = 0.0;  // 2 + 2N/H
    double actual = 0.0;    // β(m+1) or p
    bool strict = false;    // strict inequality needed (λ = 0)
    bool satisfied = false;
    int min_m = -1;         // exponential family: smallest m for which some β < 2 qualifies
    std::string note;
};

ThresholdVerdict threshold_check(const NonlinearitySpec& spec, const AnnulusSpec& annulus);

}  // namespace annulus
