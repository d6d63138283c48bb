#include <doctest.h>

#include <chrono>
#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "annulus/errors.hpp"
#include "annulus/radial.hpp"
#include "annulus/stability.hpp"

using namespace annulus;
using std::numbers::pi;

namespace {

const AnnulusSpec bench{5, 2.0, 3.0, 1.0, false};

// Independent reference: Chebyshev collocation + Newton for the radial ODE,
// energy by Clenshaw-Curtis quadrature.
struct ChebSolution {
    std::vector<double> r, u;
    double energy = 0.0;
    Eigen::VectorXd bary;  // barycentric weights

    double at(double x) const {
        double num = 0.0, den = 0.0;
        for (std::size_t k = 0; k < r.size(); ++k) {
            if (x == r[k]) return u[k];
            const double w = bary[static_cast<Eigen::Index>(k)] / (x - r[k]);
            num += w * u[k];
            den += w;
        }
        return num / den;
    }
};

template <class Guess>
ChebSolution chebyshev_reference(const AnnulusSpec& a, const NonlinearitySpec& f, int n, Guess&& guess) {
    const int m = n + 1;
    Eigen::VectorXd x(m), c(m);
    for (int k = 0; k < m; ++k) {
        x(k) = std::cos(pi * k / n);
        c(k) = ((k == 0 || k == n) ? 2.0 : 1.0) * (k % 2 ? -1.0 : 1.0);
    }
    Eigen::MatrixXd D(m, m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) D(i, j) = i == j ? 0.0 : (c(i) / c(j)) / (x(i) - x(j));
        D(i, i) = -D.row(i).sum();
    }
    const double half = 0.5 * (a.R1 - a.R0), mid = 0.5 * (a.R0 + a.R1);
    const Eigen::VectorXd r = mid + half * x.array();
    const Eigen::MatrixXd Dr = D / half;
    const Eigen::MatrixXd Drr = Dr * Dr;

    Eigen::VectorXd u(m);
    for (int k = 0; k < m; ++k) u(k) = guess(r(k));
    u(0) = u(n) = 0.0;
    const auto residual = [&](const Eigen::VectorXd& v, Eigen::MatrixXd* J) {
        Eigen::VectorXd res(m);
        const Eigen::VectorXd dv = Dr * v;
        const Eigen::VectorXd d2v = Drr * v;
        if (J) *J = -Drr;
        for (int k = 0; k < m; ++k) {
            res(k) = -d2v(k) - (a.N - 1) / r(k) * dv(k) + a.lambda * v(k) - eval_f(f, r(k), v(k));
            if (J) {
                J->row(k) -= (a.N - 1) / r(k) * Dr.row(k);
                (*J)(k, k) += a.lambda - eval_dfds(f, r(k), v(k));
            }
        }
        for (int k : {0, n}) {
            if (J) {
                J->row(k).setZero();
                (*J)(k, k) = 1.0;
            }
            res(k) = v(k);
        }
        return res;
    };
    // Damped Newton: halve the step until the residual decreases.
    for (int it = 0; it < 200; ++it) {
        Eigen::MatrixXd J;
        const Eigen::VectorXd res = residual(u, &J);
        const Eigen::VectorXd step = J.partialPivLu().solve(res);
        double t = 1.0;
        for (; t > 1e-6; t *= 0.5) {
            try {
                if (residual(u - t * step, nullptr).norm() < res.norm()) break;
            } catch (const SaturationError&) {
            }
        }
        u -= t * step;
        if (t == 1.0 && step.lpNorm<Eigen::Infinity>() < 1e-14 * u.lpNorm<Eigen::Infinity>()) break;
    }
    // Clenshaw-Curtis weights on [-1, 1].
    Eigen::VectorXd w = Eigen::VectorXd::Zero(m);
    for (int k = 0; k < m; ++k) {
        const double th = pi * k / n;
        double s = 1.0;
        for (int j = 1; j <= n / 2; ++j) {
            const double b = (2 * j == n) ? 1.0 : 2.0;
            s -= b * std::cos(2 * j * th) / (4.0 * j * j - 1);
        }
        w(k) = ((k == 0 || k == n) ? 1.0 : 2.0) * s / n;
    }
    const Eigen::VectorXd du = Dr * u;
    double J = 0.0;
    for (int k = 0; k < m; ++k) {
        const double e = 0.5 * (du(k) * du(k) + a.lambda * u(k) * u(k)) - eval_F(f, r(k), u(k));
        J += half * w(k) * e * std::pow(r(k), a.N - 1);
    }
    ChebSolution out;
    out.energy = sphere_surface(a.N - 1) * J;
    out.bary = c.cwiseInverse();
    for (int k = 0; k < m; ++k) {
        out.r.push_back(r(k));
        out.u.push_back(u(k));
        out.bary(k) = (k % 2 ? -1.0 : 1.0) * ((k == 0 || k == n) ? 0.5 : 1.0);
    }
    return out;
}

}  // namespace

TEST_CASE("benchmark radial solution") {
    const auto f = NonlinearitySpec::power(4, 4);
    const auto t0 = std::chrono::steady_clock::now();
    const RadialProfile p = solve_radial(bench, f, 2001);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(seconds < 10.0);
    CHECK(p.size() == 2001);
    CHECK(std::abs(p.u.front()) <= 1e-10);
    CHECK(std::abs(p.u.back()) <= 1e-10);
    CHECK(p.residual_inf <= 1e-9);
    CHECK(radial_identity_residual(p, f, bench) <= 1e-6);
    CHECK(hardy_ratio(p, bench) >= hardy_constant(bench));
    for (double v : p.u) CHECK(v >= 0.0);

    const ChebSolution ref = chebyshev_reference(bench, f, 48, [](double x) { return 3.0 * std::sin(pi * (x - 2.0)); });
    CHECK(p.energy == doctest::Approx(ref.energy).epsilon(1e-8));
    CHECK(radial_energy(p, f, bench) == doctest::Approx(ref.energy).epsilon(1e-8));
    double umax = 0.0;
    for (double v : ref.u) umax = std::max(umax, v);
    for (double x : {2.1, 2.37, 2.5, 2.81, 2.99}) CHECK(std::abs(p.value_at(x) - ref.at(x)) <= 1e-8 * umax);
    CHECK(p.slope == doctest::Approx(p.du.front()).epsilon(1e-6));
}

TEST_CASE("exponential family against the reference") {
    const auto f = NonlinearitySpec::exponential(1.5, 1);
    const RadialProfile p = solve_radial(bench, f, 2001);
    CHECK(p.residual_inf <= 1e-9);
    // Newton from a sine guess stalls for this family; seeding the collocation
    // solve with the profile still tests it against an independent discretization.
    const ChebSolution ref = chebyshev_reference(bench, f, 48, [&](double x) { return p.value_at(x); });
    CHECK(p.energy == doctest::Approx(ref.energy).epsilon(1e-8));
    CHECK(radial_identity_residual(p, f, bench) <= 1e-6);
}

TEST_CASE("other dimensions") {
    for (int N : {3, 4, 7}) {
        const AnnulusSpec a{N, 1.0, 2.0, 0.5, false};
        const auto f = NonlinearitySpec::power(3, 5);
        const RadialProfile p = solve_radial(a, f, 1001);
        CHECK(p.residual_inf <= 1e-9);
        CHECK(radial_identity_residual(p, f, a) <= 1e-6);
        CHECK(hardy_ratio(p, a) >= hardy_constant(a));
    }
}

TEST_CASE("solver failures") {
    // f ≡ 0: the linear problem has no positive Dirichlet solution.
    try {
        solve_radial(bench, NonlinearitySpec::linear(0.0), 501);
        FAIL("expected NoBracket");
    } catch (const SolverError& e) {
        CHECK(e.kind() == SolverError::Kind::NoBracket);
        CHECK_FALSE(e.detail().empty());
    }
    CHECK_THROWS_AS(solve_radial(bench, NonlinearitySpec::power(4, 4), 5), DomainError);
    CHECK_THROWS_AS(solve_radial(AnnulusSpec{5, 3.0, 2.0, 1.0, false}, NonlinearitySpec::power(4, 4), 501), DomainError);
}

TEST_CASE("profile helpers") {
    std::vector<double> r, u, du;
    for (int k = 0; k <= 20; ++k) {
        const double x = 1.0 + k * 0.05;
        r.push_back(x);
        u.push_back(x * x * x - 2 * x);
        du.push_back(3 * x * x - 2);
    }
    const RadialProfile p = make_profile(r, u, du);
    CHECK(p.value_at(1.234) == doctest::Approx(std::pow(1.234, 3) - 2 * 1.234).epsilon(1e-13));
    CHECK(p.derivative_at(1.777) == doctest::Approx(3 * 1.777 * 1.777 - 2).epsilon(1e-13));
    CHECK_THROWS_AS(make_profile({1, 2, 3}, {0, 0, 0}, {0, 0, 0}), DomainError);

    std::vector<double> zeros(r.size(), 0.0);
    CHECK_THROWS_AS(hardy_ratio(make_profile(r, zeros, zeros), AnnulusSpec{3, 1.0, 2.0, 0.0, false}), DomainError);

    const RadialProfile s = solve_radial(bench, NonlinearitySpec::power(4, 4), 501);
    const Grid2D g = build_grid(bench, 32, 16);
    const Field2D l = lift(s, g);
    for (std::size_t j = 0; j < g.ntheta(); ++j) {
        CHECK(l(0, j) == 0.0);
        CHECK(l(g.nr() - 1, j) == 0.0);
        CHECK(l(g.nr() / 2, j) == l(g.nr() / 2, 0));
    }
}
