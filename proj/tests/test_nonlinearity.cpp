#include <doctest.h>

#include <cmath>
#include <numbers>

#include "annulus/errors.hpp"
#include "annulus/nonlinearity.hpp"
#include "annulus/stability.hpp"

using namespace annulus;
using std::numbers::e;

namespace {

// Tail of the exponential series, summed term by term in long double.
double tail_oracle(int m, double s) {
    long double term = 1.0L, sum = 0.0L;
    for (int i = 1; i <= m; ++i) term *= static_cast<long double>(s) / i;
    for (int i = m; i < m + 400; ++i) {
        sum += term;
        term *= static_cast<long double>(s) / (i + 1);
    }
    return static_cast<double>(sum);
}

const AnnulusSpec bench{5, 2.0, 3.0, 1.0, false};

}  // namespace

TEST_CASE("exp_m") {
    CHECK(exp_m(1, 1.0) == doctest::Approx(e - 1).epsilon(1e-15));
    CHECK(exp_m(2, 0.0) == 0.0);
    CHECK(exp_m(2, 1.0) == doctest::Approx(e - 2).epsilon(1e-15));
    CHECK(exp_m(0, 1.5) == doctest::Approx(std::exp(1.5)).epsilon(1e-15));
    for (int m : {1, 2, 3, 5, 8}) {
        for (double s : {1e-8, 1e-4, 0.01, 0.3, 1.0, 4.0, 20.0, 60.0}) {
            CHECK(std::abs(exp_m(m, s) - tail_oracle(m, s)) <= 1e-12 * tail_oracle(m, s));
        }
    }
    CHECK_THROWS_AS(exp_m(1, -1.0), DomainError);
    CHECK_THROWS_AS(exp_m(1, 1e4), SaturationError);
}

TEST_CASE("f, F and df/ds examples") {
    const auto ex = NonlinearitySpec::exponential(1.5, 1);
    CHECK(eval_f(ex, 2.0, 1.0) == doctest::Approx(e - 1).epsilon(1e-14));
    CHECK(eval_F(ex, 2.0, 1.0) == doctest::Approx((e - 2) / 1.5).epsilon(1e-14));
    CHECK(eval_dfds(ex, 2.0, 1.0) == doctest::Approx(0.5 * (e - 1) + 1.5 * e).epsilon(1e-14));

    const auto p3 = NonlinearitySpec::power(3, 3);
    CHECK(eval_f(p3, 1.0, 2.0) == doctest::Approx(8.0));
    CHECK(eval_dfds(p3, 1.0, 2.0) == doctest::Approx(8.0));
    CHECK(eval_F(NonlinearitySpec::power(4, 6), 1.0, 1.0) == doctest::Approx(5.0 / 12.0));

    for (const auto& spec : {ex, p3, NonlinearitySpec::exponential(0.8, 3), NonlinearitySpec::power(2.5, 7)}) {
        CHECK(eval_f(spec, 2.5, 0.0) == 0.0);
        CHECK(eval_F(spec, 2.5, 0.0) == 0.0);
        // odd extension of f, even F
        CHECK(eval_f(spec, 2.5, -0.7) == doctest::Approx(-eval_f(spec, 2.5, 0.7)));
        CHECK(eval_F(spec, 2.5, -0.7) == doctest::Approx(eval_F(spec, 2.5, 0.7)));
        // continuity at 0
        CHECK(std::abs(eval_f(spec, 2.5, 1e-9)) < 1e-8);
        // central differences
        const double h = 1e-5;
        for (double s : {0.3, 1.0, 2.0}) {
            const double fd = (eval_f(spec, 2.5, s + h) - eval_f(spec, 2.5, s - h)) / (2 * h);
            CHECK(std::abs(fd - eval_dfds(spec, 2.5, s)) <= 1e-6 * std::abs(eval_dfds(spec, 2.5, s)));
            const double Fd = (eval_F(spec, 2.5, s + h) - eval_F(spec, 2.5, s - h)) / (2 * h);
            CHECK(std::abs(Fd - eval_f(spec, 2.5, s)) <= 1e-6 * std::abs(eval_f(spec, 2.5, s)));
        }
    }
    CHECK_THROWS_AS(eval_f(ex, 2.0, 1e5), SaturationError);
}

TEST_CASE("weights") {
    const auto w = WeightSpec::tabulated({1.0, 2.0, 3.0}, {3.0, 2.0, 2.0});
    CHECK(w(1.5) == doctest::Approx(2.5));
    CHECK(w(0.5) == doctest::Approx(3.0));
    CHECK(w(4.0) == doctest::Approx(2.0));
    const auto spec = NonlinearitySpec::power(3, 3, w);
    CHECK(eval_f(spec, 1.5, 2.0) == doctest::Approx(2.5 * 8.0));
    CHECK_THROWS_AS(WeightSpec::constant(0.0).validate(), DomainError);
    CHECK_THROWS_AS(WeightSpec::tabulated({1.0, 1.0}, {1.0, 1.0}).validate(), DomainError);
    CHECK_THROWS_AS(WeightSpec::tabulated({1.0, 2.0}, {1.0, -1.0}).validate(), DomainError);
}

TEST_CASE("family invariants") {
    CHECK_THROWS_AS(NonlinearitySpec::exponential(0.9, 1).validate(), DomainError);  // β(m+1) = 1.8
    CHECK_THROWS_AS(NonlinearitySpec::exponential(2.0, 1).validate(), DomainError);
    CHECK_THROWS_AS(NonlinearitySpec::power(2.0, 3).validate(), DomainError);
    CHECK_THROWS_AS(NonlinearitySpec::power(4, 3).validate(), DomainError);
    CHECK_NOTHROW(NonlinearitySpec::exponential(0.9, 2).validate());
}

TEST_CASE("assumption ledger") {
    const auto ex = assumption_report(NonlinearitySpec::exponential(1.5, 1), bench, 10000);
    CHECK(ex.sigma == doctest::Approx(3.0));
    CHECK(ex.delta_max == doctest::Approx(2.0));
    CHECK(ex.sampled_violations.empty());
    CHECK(ex.sampled_delta_inf >= ex.delta_max * (1 - 1e-12));

    const auto pw = assumption_report(NonlinearitySpec::power(4, 6), bench, 10000);
    CHECK(pw.sigma == doctest::Approx(4.0));
    CHECK(pw.delta_max == doctest::Approx(3.0));
    CHECK(pw.sampled_violations.empty());
    CHECK(pw.sigma > 2.0);
    CHECK(pw.delta_max > 1.0);

    CHECK_THROWS_AS(assumption_report(NonlinearitySpec::power(4, 6), bench, 99), DomainError);
}

TEST_CASE("thresholds") {
    const auto v = threshold_check(NonlinearitySpec::power(4, 4), bench);
    CHECK(v.H == doctest::Approx(6.25));
    CHECK(v.required == doctest::Approx(3.6));
    CHECK(v.satisfied);
    CHECK_FALSE(threshold_check(NonlinearitySpec::power(3.5, 4), bench).satisfied);

    const auto ex = threshold_check(NonlinearitySpec::exponential(1.9, 1), bench);
    CHECK(ex.actual == doctest::Approx(3.8));
    CHECK(ex.satisfied);
    CHECK(ex.min_m == 1);

    // λ = 0 needs the strict inequality: H = 1/4 for N = 3, threshold 26.
    const AnnulusSpec flat{3, 1.0, 2.0, 0.0, false};
    const auto s = threshold_check(NonlinearitySpec::power(26, 26), flat);
    CHECK(s.strict);
    CHECK(s.required == doctest::Approx(26.0));
    CHECK_FALSE(s.satisfied);
    CHECK(threshold_check(NonlinearitySpec::power(26.5, 26.5), flat).satisfied);
}
