// Acceptance checks on the breaking benchmark and the property suites.
// One PASS/FAIL line per criterion; exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "annulus/conevar.hpp"
#include "annulus/errors.hpp"
#include "annulus/orlicz.hpp"
#include "annulus/radial.hpp"
#include "annulus/stability.hpp"

using namespace annulus;

namespace {

const AnnulusSpec bench{5, 2.0, 3.0, 1.0, false};
const NonlinearitySpec quartic = NonlinearitySpec::power(4, 4);

struct Check {
    std::string detail;
    bool ok = true;
    void require(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            if (!detail.empty()) detail += "; ";
            detail += what;
        }
    }
};

std::string fmt(const char* f, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

int failures = 0;

void criterion(int id, const char* name, double budget_s, const std::function<void(Check&)>& body) {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(c);
    } catch (const std::exception& e) {
        c.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    c.require(secs < budget_s, fmt("runtime %.1f s over budget", secs));
    if (!c.ok) ++failures;
    std::printf("%s %d %s (%.2f s)%s%s\n", c.ok ? "PASS" : "FAIL", id, name, secs, c.detail.empty() ? "" : ": ",
                c.detail.c_str());
    std::fflush(stdout);
}

double l2_weighted(const Field2D& u, const Grid2D& g) {
    double s = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) s += g.quad_weights[k] * u.values[k] * u.values[k];
    return std::sqrt(s);
}

}  // namespace

int main() {
    criterion(1, "angular identities", 1.0, [](Check& c) {
        for (int N = 3; N <= 8; ++N) {
            const AngularIntegrals in = angular_integrals(angular_mode(N, 257));
            c.require(std::abs(in.y) <= 1e-10, "mean of y, N=" + std::to_string(N));
            c.require(std::abs(in.dy2 - 2.0 * N * in.y2) <= 1e-10 * std::max(1.0, in.dy2),
                      "Rayleigh identity, N=" + std::to_string(N));
            if (N == 3) {
                c.require(std::abs(in.dy2 - 24.0 / 5.0) <= 1e-10, "N=3 gradient side");
                c.require(std::abs(6.0 * in.y2 - 24.0 / 5.0) <= 1e-10, "N=3 mass side");
            }
        }
    });

    RadialProfile prof;
    criterion(2, "radial benchmark", 10.0, [&](Check& c) {
        prof = solve_radial(bench, quartic, 2001);
        c.require(std::abs(prof.u.front()) <= 1e-10 && std::abs(prof.u.back()) <= 1e-10, "boundary values");
        c.require(prof.residual_inf <= 1e-9, fmt("ODE residual %.3g", prof.residual_inf));
        const double id = radial_identity_residual(prof, quartic, bench);
        c.require(id <= 1e-6, fmt("integrated identity %.3g", id));
        const double hr = hardy_ratio(prof, bench);
        c.require(hr >= 6.25, fmt("hardy ratio %.6g", hr));
    });

    criterion(3, "second variation cross-check", 30.0, [&](Check& c) {
        const Grid2D g = build_grid(bench, 256, 128);
        const StabilityReport rep = symmetry_breaking_report(bench, quartic, prof, &g);
        c.require(rep.cross_check.has_value() && *rep.cross_check <= 1e-6,
                  fmt("relative discrepancy %.3g", rep.cross_check.value_or(HUGE_VAL)));
    });

    criterion(4, "symmetry-breaking sign", 120.0, [&](Check& c) {
        const StabilityReport rep = symmetry_breaking_report(bench, quartic, prof);
        c.require(std::abs(rep.delta_certified - 3.0) <= 1e-12, fmt("delta_certified %.17g", rep.delta_certified));
        c.require(std::abs(rep.delta_required - 2.6) <= 1e-12, fmt("delta_required %.17g", rep.delta_required));
        c.require(rep.delta_certified >= rep.delta_required, "sufficient condition");
        c.require(rep.second_variation < 0.0, "second variation sign");
        int changes = 0;
        double prev = 0.0;
        for (double p : {2.5, 3.0, 3.6, 4.0, 5.0}) {
            const auto f = NonlinearitySpec::power(p, p);
            const double D = stability_indicator(solve_radial(bench, f, 2001), f, bench);
            if (prev != 0.0 && (D < 0.0) != (prev < 0.0)) ++changes;
            prev = D;
            if (p >= 3.7) c.require(D < 0.0, fmt("D >= 0 at p=%g", p));
        }
        c.require(changes <= 1, "more than one sign change");
    });

    criterion(5, "path test", 120.0, [&](Check& c) {
        const Grid2D g = build_grid(bench, 128, 64);
        const EnergyModel model(g, quartic, bench);
        std::vector<PathTestResult> rs;
        for (double tau : {0.02, 0.035, 0.05}) {
            rs.push_back(breaking_path_test(prof, tau, model));
            c.require(rs.back().margin > 0.0, fmt("margin <= 0 at tau=%g", tau));
        }
        const double sv = symmetry_breaking_report(bench, quartic, prof).second_variation;
        const double coef = extrapolate_margin_coefficient(rs);
        const double rel = std::abs(coef - (-0.5 * sv)) / std::abs(0.5 * sv);
        c.require(rel <= 0.15, fmt("quadratic coefficient off by %.3g", rel));
    });

    criterion(6, "mountain pass", 600.0, [&](Check& c) {
        const Grid2D g = build_grid(bench, 128, 64);
        const MountainPassResult r = mountain_pass(g, quartic, bench);
        c.require(r.converged && r.grad_norm <= 1e-6, fmt("gradient norm %.3g", r.grad_norm));
        c.require(r.energy > 0.0, "energy not positive");
        c.require(!r.is_radial, "candidate is radial");
        c.require(r.energy <= prof.energy - 1e-4, fmt("energy %.10g not below radial", r.energy));
    });

    criterion(7, "gradient and fibering oracles", 30.0, [](Check& c) {
        const Grid2D g = build_grid(bench, 64, 32);
        const EnergyModel model(g, quartic, bench);
        std::mt19937_64 rng(2024);
        std::uniform_real_distribution<double> U(-1.0, 1.0);
        double worst = 0.0;
        for (int k = 0; k < 10; ++k) {
            const Field2D x = 2.0 * random_cone_field(g, 500 + k);
            Field2D phi(g);
            for (std::size_t i = 0; i < g.nr(); ++i)
                for (std::size_t j = 0; j < g.ntheta(); ++j)
                    phi(i, j) = (i == 0 || i + 1 == g.nr()) ? 0.0 : U(rng);
            const Field2D grad = model.gradient(x);
            double dir = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) dir += grad.values[i] * phi.values[i];
            const double h = 1e-6;
            const double fd = (model.energy(x + h * phi) - model.energy(x - h * phi)) / (2 * h);
            worst = std::max(worst, std::abs(fd - dir) / std::max(std::abs(dir), 1.0));
        }
        c.require(worst <= 1e-6, fmt("gradient check %.3g", worst));

        for (double p : {3.0, 4.0, 6.0}) {
            const auto f = NonlinearitySpec::power(p, p);
            const EnergyModel m(g, f, bench);
            const Field2D phi = random_cone_field(g, 77);
            double B = 0.0;
            for (std::size_t i = 0; i < phi.size(); ++i) B += 2.0 * g.quad_weights[i] * std::pow(phi.values[i], p);
            const double A = m.stiffness().quadratic(phi);
            const double exact = std::pow(A / B, 1.0 / (p - 2.0));
            const double t = fibering_max(phi, m).t_star;
            c.require(std::abs(t - exact) <= 1e-8 * exact, fmt("fibering off at p=%g", p));
        }
    });

    criterion(8, "Orlicz suite", 120.0, [](Check& c) {
        const Grid2D g = build_grid(bench, 64, 64);
        const double vol = integrate(Field2D(g, 1.0), g);
        for (double cst : {0.3, 1.0, 5.0}) {
            const double expect = cst / std::sqrt(std::log1p(1.0 / vol));
            const double got = luxemburg_norm(Field2D(g, cst), g).norm;
            c.require(std::abs(got - expect) <= 1e-8 * expect, fmt("constant field c=%g", cst));
        }
        const Grid2D h = build_grid(bench, 48, 24);
        int bad_h = 0, bad_t = 0;
        for (int k = 0; k < 50; ++k) {
            const Field2D u = random_cone_field(h, 1000 + k), v = random_cone_field(h, 2000 + k);
            const double nu = luxemburg_norm(u, h).norm, nv = luxemburg_norm(v, h).norm;
            for (double s : {0.5, 2.0, 10.0})
                if (std::abs(luxemburg_norm(s * u, h).norm - s * nu) > 1e-8 * s * nu) ++bad_h;
            if (luxemburg_norm(u + v, h).norm > (nu + nv) * (1.0 + 1e-9)) ++bad_t;
            if (l2_weighted(u, h) > nu * (1.0 + 1e-9)) ++bad_t;
        }
        c.require(bad_h == 0, std::to_string(bad_h) + " homogeneity failures");
        c.require(bad_t == 0, std::to_string(bad_t) + " triangle failures");
        const TMProbeSummary coarse = tm_probe(build_grid(bench, 64, 32), 0.2, 64, 1);
        const TMProbeSummary fine = tm_probe(build_grid(bench, 128, 64), 0.2, 64, 1);
        c.require(coarse.saturated_count == 0 && fine.saturated_count == 0, "saturated samples");
        const double ratio = fine.max_modulus / coarse.max_modulus;
        c.require(ratio <= 2.0 && ratio >= 0.5, fmt("refinement ratio %.3g", ratio));
    });

    criterion(9, "assumption ledger", 5.0, [](Check& c) {
        const AssumptionReport ex = assumption_report(NonlinearitySpec::exponential(1.5, 1), bench, 10000);
        const AssumptionReport pw = assumption_report(NonlinearitySpec::power(4, 6), bench, 10000);
        c.require(ex.sample_count >= 10000 && pw.sample_count >= 10000, "sample count");
        c.require(std::abs(ex.sigma - 3.0) <= 1e-12, fmt("exponential sigma %.17g", ex.sigma));
        c.require(std::abs(pw.sigma - 4.0) <= 1e-12, fmt("power sigma %.17g", pw.sigma));
        c.require(ex.sampled_violations.empty(), std::to_string(ex.sampled_violations.size()) + " exponential violations");
        c.require(pw.sampled_violations.empty(), std::to_string(pw.sampled_violations.size()) + " power violations");
        c.require(ex.sampled_delta_inf >= ex.delta_max * (1 - 1e-12), "exponential delta_max");
        c.require(pw.sampled_delta_inf >= pw.delta_max * (1 - 1e-12), "power delta_max");
    });

    return failures == 0 ? 0 : 1;
}
