#include "annulus/radial.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include <boost/numeric/odeint.hpp>

#include "annulus/errors.hpp"
#include "annulus/quadrature.hpp"

namespace annulus {

namespace {

namespace odeint = boost::numeric::odeint;
using State = std::array<double, 2>;

struct Shot {
    bool crossed = false;  // first positive arc ended before R1
    double r_zero = 0.0;
    double u_end = 0.0;
};

class Shooter {
public:
    Shooter(const AnnulusSpec& a, const NonlinearitySpec& f, double tol) : a_(a), f_(f), tol_(tol) {}

    // Integrates from (0, s) at R0. If `nodes` is non-null, u is recorded there.
    Shot operator()(double s, const std::vector<double>* nodes = nullptr, std::vector<double>* u_out = nullptr) const {
        const auto system = [this](const State& x, State& dxdt, double r) {
            dxdt[0] = x[1];
            dxdt[1] = -(a_.N - 1) / r * x[1] + a_.lambda * x[0] - eval_f(f_, r, x[0]);
        };
        auto stepper = odeint::make_dense_output(tol_, tol_, odeint::runge_kutta_dopri5<State>());
        stepper.initialize(State{0.0, s}, a_.R0, 1e-4 * (a_.R1 - a_.R0));

        Shot shot;
        std::size_t next = 1;
        State tmp{};
        bool started = false;  // u has become positive
        while (stepper.current_time() < a_.R1) {
            stepper.do_step(system);
            const double t = stepper.current_time();
            if (nodes != nullptr) {
                while (next < nodes->size() && (*nodes)[next] <= t) {
                    stepper.calc_state((*nodes)[next], tmp);
                    (*u_out)[next++] = tmp[0];
                }
            }
            const double u = stepper.current_state()[0];
            if (u > 0.0) started = true;
            if (started && u <= 0.0 && nodes == nullptr) {
                double lo = stepper.previous_time(), hi = std::min(t, a_.R1);
                for (int k = 0; k < 60; ++k) {
                    const double mid = 0.5 * (lo + hi);
                    stepper.calc_state(mid, tmp);
                    (tmp[0] > 0.0 ? lo : hi) = mid;
                }
                if (hi < a_.R1) {
                    shot.crossed = true;
                    shot.r_zero = hi;
                    return shot;
                }
            }
        }
        stepper.calc_state(a_.R1, tmp);
        shot.u_end = tmp[0];
        if (!started) shot.crossed = true;  // never rose above zero
        return shot;
    }

private:
    const AnnulusSpec& a_;
    const NonlinearitySpec& f_;
    double tol_;
};

bool undershoots(const Shot& s) { return !s.crossed && s.u_end > 0.0; }

// Solves a tridiagonal system in place (Thomas algorithm); rhs is overwritten with the solution.
void thomas(std::vector<double> lower, std::vector<double> diag, std::vector<double> upper, std::vector<double>& rhs) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        const double m = lower[i] / diag[i - 1];
        diag[i] -= m * upper[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

// Fourth-order first derivative on a uniform grid.
std::vector<double> derivative4(const std::vector<double>& v, double h) {
    const std::size_t n = v.size();
    std::vector<double> d(n);
    for (std::size_t i = 2; i + 2 < n; ++i) {
        d[i] = (v[i - 2] - 8.0 * v[i - 1] + 8.0 * v[i + 1] - v[i + 2]) / (12.0 * h);
    }
    d[0] = (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) / (12.0 * h);
    d[1] = (-3.0 * v[0] - 10.0 * v[1] + 18.0 * v[2] - 6.0 * v[3] + v[4]) / (12.0 * h);
    d[n - 1] = (25.0 * v[n - 1] - 48.0 * v[n - 2] + 36.0 * v[n - 3] - 16.0 * v[n - 4] + 3.0 * v[n - 5]) / (12.0 * h);
    d[n - 2] = (3.0 * v[n - 1] + 10.0 * v[n - 2] - 18.0 * v[n - 3] + 6.0 * v[n - 4] - v[n - 5]) / (12.0 * h);
    return d;
}

struct Numerov {
    const AnnulusSpec& a;
    const NonlinearitySpec& f;
    std::vector<double> r, rk;  // nodes and r^{(N-1)/2}
    double h = 0.0, c = 0.0;

    Numerov(const AnnulusSpec& a_, const NonlinearitySpec& f_, std::size_t n) : a(a_), f(f_), r(n), rk(n) {
        h = (a.R1 - a.R0) / static_cast<double>(n - 1);
        const double k = 0.5 * (a.N - 1);
        c = k * (k - 1.0);
        for (std::size_t i = 0; i < n; ++i) {
            r[i] = (i + 1 == n) ? a.R1 : a.R0 + h * static_cast<double>(i);
            rk[i] = std::pow(r[i], k);
        }
    }

    double g(std::size_t i, double v) const {
        return (a.lambda + c / (r[i] * r[i])) * v - rk[i] * eval_f(f, r[i], v / rk[i]);
    }
    double dg(std::size_t i, double v) const {
        return a.lambda + c / (r[i] * r[i]) - eval_dfds(f, r[i], v / rk[i]);
    }

    // Discrete residual at interior nodes (index 0 and n-1 unused).
    std::vector<double> residual(const std::vector<double>& v) const {
        const std::size_t n = v.size();
        std::vector<double> gv(n), res(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) gv[i] = g(i, v[i]);
        const double w = h * h / 12.0;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            res[i] = (v[i - 1] - 2.0 * v[i] + v[i + 1]) - w * (gv[i - 1] + 10.0 * gv[i] + gv[i + 1]);
        }
        return res;
    }

    // Residual of -Δu + λu - f in the u-equation, relative to max(1, max |f|).
    double relative_residual(const std::vector<double>& v) const {
        const auto res = residual(v);
        double worst = 0.0, fmax = 1.0;
        for (std::size_t i = 1; i + 1 < v.size(); ++i) {
            worst = std::max(worst, std::abs(res[i]) / (h * h * rk[i]));
            fmax = std::max(fmax, std::abs(eval_f(f, r[i], v[i] / rk[i])));
        }
        return worst / fmax;
    }

    static double norm_inf(const std::vector<double>& x) {
        double m = 0.0;
        for (double e : x) m = std::max(m, std::abs(e));
        return m;
    }
};

}  // namespace

double RadialProfile::value_at(double x) const {
    const std::size_t n = r.size();
    if (n < 2) throw DomainError("RadialProfile: need at least 2 samples");
    if (x <= r.front()) return u.front();
    if (x >= r.back()) return u.back();
    const double h = spacing();
    auto k = static_cast<std::size_t>((x - r.front()) / h);
    k = std::min(k, n - 2);
    const double hk = r[k + 1] - r[k];
    const double t = (x - r[k]) / hk;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * u[k] + (t3 - 2 * t2 + t) * hk * du[k] + (-2 * t3 + 3 * t2) * u[k + 1] +
           (t3 - t2) * hk * du[k + 1];
}

double RadialProfile::derivative_at(double x) const {
    const std::size_t n = r.size();
    if (n < 2) throw DomainError("RadialProfile: need at least 2 samples");
    if (x <= r.front()) return du.front();
    if (x >= r.back()) return du.back();
    const double h = spacing();
    auto k = static_cast<std::size_t>((x - r.front()) / h);
    k = std::min(k, n - 2);
    const double hk = r[k + 1] - r[k];
    const double t = (x - r[k]) / hk;
    const double t2 = t * t;
    return ((6 * t2 - 6 * t) * u[k] + (-6 * t2 + 6 * t) * u[k + 1]) / hk + (3 * t2 - 4 * t + 1) * du[k] +
           (3 * t2 - 2 * t) * du[k + 1];
}

RadialProfile make_profile(std::vector<double> r, std::vector<double> u, std::vector<double> du) {
    if (r.size() < 5 || u.size() != r.size() || du.size() != r.size()) {
        throw DomainError("make_profile: need >= 5 samples with matching sizes");
    }
    RadialProfile p;
    p.r = std::move(r);
    p.u = std::move(u);
    p.du = std::move(du);
    return p;
}

RadialProfile solve_radial(const AnnulusSpec& annulus, const NonlinearitySpec& nonlin, std::size_t n_nodes,
                           const RadialOptions& opts) {
    annulus.validate();
    nonlin.validate();
    if (n_nodes < 11) throw DomainError("solve_radial: n_nodes must be >= 11");
    if (opts.slope_ladder < 2 || !(opts.slope_min > 0.0) || !(opts.slope_max > opts.slope_min)) {
        throw DomainError("solve_radial: invalid slope ladder");
    }

    const Shooter shoot(annulus, nonlin, opts.shoot_tol);

    // Phase 1: bracket and bisect the initial slope.
    std::ostringstream log;
    log.precision(6);
    double s_lo = 0.0, s_hi = 0.0;
    bool have_lo = false, bracketed = false;
    for (int k = 0; k < opts.slope_ladder && !bracketed; ++k) {
        const double s =
            opts.slope_min * std::pow(opts.slope_max / opts.slope_min, static_cast<double>(k) / (opts.slope_ladder - 1));
        Shot shot;
        try {
            shot = shoot(s);
        } catch (const SaturationError&) {
            log << "s=" << s << ": saturated; ";
            continue;
        }
        log << "s=" << s << (shot.crossed ? ": zero at r=" : ": u(R1)=") << (shot.crossed ? shot.r_zero : shot.u_end)
            << "; ";
        if (undershoots(shot)) {
            s_lo = s;
            have_lo = true;
        } else if (have_lo) {
            s_hi = s;
            bracketed = true;
        }
    }
    if (!bracketed) {
        throw SolverError(SolverError::Kind::NoBracket, "solve_radial: no sign change of u(R1) over the slope sweep",
                          log.str());
    }
    for (int it = 0; it < opts.bisection_steps && (s_hi - s_lo) > 1e-15 * s_hi; ++it) {
        const double mid = 0.5 * (s_lo + s_hi);
        (undershoots(shoot(mid)) ? s_lo : s_hi) = mid;
    }
    const double slope = 0.5 * (s_lo + s_hi);

    // Phase 2: Newton on the Numerov discretization, seeded by the shot.
    Numerov scheme(annulus, nonlin, n_nodes);
    std::vector<double> u0(n_nodes, 0.0);
    shoot(slope, &scheme.r, &u0);
    u0.front() = 0.0;
    u0.back() = 0.0;
    std::vector<double> v(n_nodes);
    for (std::size_t i = 0; i < n_nodes; ++i) v[i] = u0[i] * scheme.rk[i];

    const std::size_t m = n_nodes - 2;
    const double w = scheme.h * scheme.h / 12.0;
    auto res = scheme.residual(v);
    double res_norm = Numerov::norm_inf(res);
    int iterations = 0;
    for (; iterations < opts.max_newton; ++iterations) {
        std::vector<double> lower(m), diag(m), upper(m), rhs(m);
        std::vector<double> dgv(n_nodes);
        for (std::size_t i = 0; i < n_nodes; ++i) dgv[i] = scheme.dg(i, v[i]);
        for (std::size_t k = 0; k < m; ++k) {
            const std::size_t i = k + 1;
            diag[k] = -2.0 - 10.0 * w * dgv[i];
            lower[k] = 1.0 - w * dgv[i - 1];
            upper[k] = 1.0 - w * dgv[i + 1];
            rhs[k] = -res[i];
        }
        thomas(lower, diag, upper, rhs);

        double step = 1.0;
        bool accepted = false;
        std::vector<double> trial(v), trial_res;
        for (int ls = 0; ls < 30 && !accepted; ++ls, step *= 0.5) {
            for (std::size_t k = 0; k < m; ++k) trial[k + 1] = v[k + 1] + step * rhs[k];
            trial_res = scheme.residual(trial);
            accepted = Numerov::norm_inf(trial_res) < res_norm;
        }
        if (!accepted) break;  // at roundoff level (or stuck); the residual check below decides
        step *= 2.0;
        v = std::move(trial);
        res = std::move(trial_res);
        res_norm = Numerov::norm_inf(res);
        if (step * Numerov::norm_inf(rhs) <= 1e-14 * Numerov::norm_inf(v)) {
            ++iterations;
            break;
        }
    }

    const double rel = scheme.relative_residual(v);
    if (!(rel <= opts.tol) || !std::isfinite(rel)) {
        std::ostringstream msg;
        msg << "solve_radial: Newton refinement stopped with relative residual " << rel;
        throw SolverError(SolverError::Kind::NewtonDiverged, msg.str(), "last_residual=" + std::to_string(rel));
    }

    RadialProfile profile;
    profile.r = scheme.r;
    profile.u.resize(n_nodes);
    for (std::size_t i = 0; i < n_nodes; ++i) profile.u[i] = v[i] / scheme.rk[i];
    profile.u.front() = 0.0;
    profile.u.back() = 0.0;
    for (std::size_t i = 1; i + 1 < n_nodes; ++i) {
        if (!(profile.u[i] > 0.0)) {
            throw SolverError(SolverError::Kind::NewtonDiverged,
                              "solve_radial: refined profile is not positive in the interior");
        }
    }
    const auto dv = derivative4(v, scheme.h);
    const double k = 0.5 * (annulus.N - 1);
    profile.du.resize(n_nodes);
    for (std::size_t i = 0; i < n_nodes; ++i) {
        profile.du[i] = (dv[i] - k * v[i] / profile.r[i]) / scheme.rk[i];
    }
    profile.residual_inf = rel;
    profile.slope = slope;
    profile.newton_iterations = iterations;
    profile.energy = radial_energy(profile, nonlin, annulus);
    return profile;
}

double radial_energy(const RadialProfile& p, const NonlinearitySpec& nonlin, const AnnulusSpec& annulus) {
    const std::size_t n = p.size();
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double w = std::pow(p.r[i], annulus.N - 1);
        y[i] = (0.5 * (p.du[i] * p.du[i] + annulus.lambda * p.u[i] * p.u[i]) - eval_F(nonlin, p.r[i], p.u[i])) * w;
    }
    return sphere_surface(annulus.N - 1) * simpson_uniform(y, p.spacing());
}

double radial_identity_residual(const RadialProfile& p, const NonlinearitySpec& nonlin, const AnnulusSpec& annulus) {
    const std::size_t n = p.size();
    std::vector<double> lhs(n), rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double w = std::pow(p.r[i], annulus.N - 1);
        lhs[i] = (p.du[i] * p.du[i] + annulus.lambda * p.u[i] * p.u[i]) * w;
        rhs[i] = p.u[i] * eval_f(nonlin, p.r[i], p.u[i]) * w;
    }
    const double a = simpson_uniform(lhs, p.spacing());
    const double b = simpson_uniform(rhs, p.spacing());
    return std::abs(a - b) / std::max(1.0, std::abs(b));
}

double hardy_ratio(const RadialProfile& p, const AnnulusSpec& annulus) {
    const std::size_t n = p.size();
    std::vector<double> num(n), den(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double w = std::pow(p.r[i], annulus.N - 1);
        num[i] = (p.du[i] * p.du[i] + annulus.lambda * p.u[i] * p.u[i]) * w;
        den[i] = p.u[i] * p.u[i] / (p.r[i] * p.r[i]) * w;
    }
    const double d = simpson_uniform(den, p.spacing());
    if (!(d > 0.0)) throw DomainError("hardy_ratio: zero profile");
    return simpson_uniform(num, p.spacing()) / d;
}

Field2D lift(const RadialProfile& profile, const Grid2D& grid) {
    Field2D out(grid);
    const std::size_t nr = grid.nr();
    for (std::size_t i = 0; i < nr; ++i) {
        double value = profile.value_at(grid.r_rule.nodes[i]);
        if (i == 0) value = profile.u.front();
        if (i + 1 == nr) value = profile.u.back();
        for (std::size_t j = 0; j < grid.ntheta(); ++j) out(i, j) = value;
    }
    return out;
}

}  // namespace annulus
