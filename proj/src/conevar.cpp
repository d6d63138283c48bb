#include "annulus/conevar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "annulus/errors.hpp"
#include "annulus/stability.hpp"

namespace annulus {

namespace {

double dot(const Field2D& a, const Field2D& b) {
    CompensatedSum s;
    for (std::size_t k = 0; k < a.size(); ++k) s.add(a.values[k] * b.values[k]);
    return s.value();
}

// F(b) - F(a) without cancellation for nearby arguments (Simpson on f; the
// remainder is O((b-a)^5) and far below roundoff in that regime).
double potential_increment(const NonlinearitySpec& f, double r, double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    if (std::abs(b - a) <= 1e-3 * scale) {
        const double m = 0.5 * (a + b);
        return (b - a) / 6.0 * (eval_f(f, r, a) + 4.0 * eval_f(f, r, m) + eval_f(f, r, b));
    }
    return eval_F(f, r, b) - eval_F(f, r, a);
}

}  // namespace

// ---------------------------------------------------------------------------
// Cone projection

bool in_cone(const Field2D& u, double slack) {
    for (std::size_t i = 0; i < u.nr; ++i) {
        for (std::size_t j = 0; j < u.ntheta; ++j) {
            if (u(i, j) < -slack) return false;
            if (j > 0 && u(i, j) > u(i, j - 1) + slack) return false;
        }
    }
    return true;
}

std::vector<double> isotonic_nonincreasing(std::span<const double> values, std::span<const double> weights) {
    if (values.size() != weights.size()) throw DomainError("isotonic_nonincreasing: size mismatch");
    struct Block {
        double w, wv, v;  // total weight, weighted sum, plain sum
        std::size_t count;
        double mean() const { return w > 0.0 ? wv / w : v / static_cast<double>(count); }
    };
    std::vector<Block> blocks;
    blocks.reserve(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) {
        blocks.push_back({weights[k], weights[k] * values[k], values[k], 1});
        while (blocks.size() > 1 && blocks[blocks.size() - 2].mean() < blocks.back().mean()) {
            Block top = blocks.back();
            blocks.pop_back();
            Block& prev = blocks.back();
            const bool prev_weighted = prev.w > 0.0;
            const bool top_weighted = top.w > 0.0;
            if (prev_weighted != top_weighted) {
                // A weightless block takes the value of the weighted one it joins.
                const Block& weighted = prev_weighted ? prev : top;
                const double m = weighted.mean();
                prev = {weighted.w, weighted.wv, m * static_cast<double>(prev.count + top.count), prev.count + top.count};
            } else {
                prev = {prev.w + top.w, prev.wv + top.wv, prev.v + top.v, prev.count + top.count};
            }
        }
    }
    std::vector<double> out;
    out.reserve(values.size());
    for (const Block& b : blocks) out.insert(out.end(), b.count, b.mean());
    return out;
}

ConeField project_cone(const Field2D& field, const Grid2D& grid) {
    if (!field.matches(grid)) throw DomainError("project_cone: dimension mismatch");
    const std::size_t nt = field.ntheta;
    const std::span<const double> w(grid.angular_weights);
    ConeField out{Field2D(field.nr, nt)};

    std::vector<double> x(nt), p(nt), q(nt), y(nt), z(nt), shifted(nt);
    for (std::size_t i = 0; i < field.nr; ++i) {
        for (std::size_t j = 0; j < nt; ++j) x[j] = field(i, j);
        std::fill(p.begin(), p.end(), 0.0);
        std::fill(q.begin(), q.end(), 0.0);
        for (int it = 0; it < 1000; ++it) {
            for (std::size_t j = 0; j < nt; ++j) shifted[j] = x[j] + p[j];
            y = isotonic_nonincreasing(shifted, w);
            for (std::size_t j = 0; j < nt; ++j) {
                p[j] = shifted[j] - y[j];
                z[j] = std::max(0.0, y[j] + q[j]);
                q[j] = y[j] + q[j] - z[j];
            }
            double change = 0.0, scale = 0.0;
            for (std::size_t j = 0; j < nt; ++j) {
                change += w[j] * (z[j] - x[j]) * (z[j] - x[j]);
                scale += w[j] * z[j] * z[j];
            }
            x.swap(z);
            if (std::sqrt(change) <= 1e-12 * std::max(1.0, std::sqrt(scale))) break;
        }
        // The last isotonic iterate, clamped, satisfies both constraints exactly.
        for (std::size_t j = 0; j < nt; ++j) out.field(i, j) = std::max(0.0, y[j]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Energy

EnergyModel::EnergyModel(const Grid2D& grid, NonlinearitySpec nonlin, AnnulusSpec annulus)
    : grid_(&grid), nonlin_(std::move(nonlin)), annulus_(annulus), K_(grid, annulus.lambda) {
    nonlin_.validate();
    annulus_.validate();
}

void EnergyModel::check_boundary(const Field2D& u) const {
    if (!u.matches(*grid_)) throw DomainError("EnergyModel: dimension mismatch");
    const double tol = 1e-12 * std::max(1.0, u.max_abs());
    const std::size_t last = u.nr - 1;
    for (std::size_t j = 0; j < u.ntheta; ++j) {
        if (std::abs(u(0, j)) > tol || std::abs(u(last, j)) > tol) {
            throw DomainError("EnergyModel: field does not vanish on the r-boundary");
        }
    }
}

double EnergyModel::potential(const Field2D& u) const {
    CompensatedSum s;
    const std::size_t nt = grid_->ntheta();
    for (std::size_t k = 0; k < u.size(); ++k) {
        const double w = grid_->quad_weights[k];
        if (w != 0.0) s.add(w * eval_F(nonlin_, grid_->r_rule.nodes[k / nt], u.values[k]));
    }
    return s.value();
}

double EnergyModel::energy(const Field2D& u) const {
    check_boundary(u);
    return 0.5 * K_.quadratic(u) - potential(u);
}

Field2D EnergyModel::gradient(const Field2D& u) const {
    check_boundary(u);
    Field2D g = K_.apply(u);
    const std::size_t nt = grid_->ntheta();
    for (std::size_t k = 0; k < u.size(); ++k) {
        const double w = grid_->quad_weights[k];
        if (w != 0.0) g.values[k] -= w * eval_f(nonlin_, grid_->r_rule.nodes[k / nt], u.values[k]);
    }
    for (std::size_t j = 0; j < nt; ++j) {
        g(0, j) = 0.0;
        g(g.nr - 1, j) = 0.0;
    }
    return g;
}

double EnergyModel::nonlinear_pairing(const Field2D& phi, double t) const {
    CompensatedSum s;
    const std::size_t nt = grid_->ntheta();
    for (std::size_t k = 0; k < phi.size(); ++k) {
        const double w = grid_->quad_weights[k];
        if (w != 0.0 && phi.values[k] != 0.0) {
            s.add(w * eval_f(nonlin_, grid_->r_rule.nodes[k / nt], t * phi.values[k]) * phi.values[k]);
        }
    }
    return s.value();
}

double EnergyModel::nonlinear_curvature(const Field2D& phi, double t) const {
    CompensatedSum s;
    const std::size_t nt = grid_->ntheta();
    for (std::size_t k = 0; k < phi.size(); ++k) {
        const double w = grid_->quad_weights[k];
        if (w != 0.0 && phi.values[k] != 0.0) {
            const double v = phi.values[k];
            s.add(w * eval_dfds(nonlin_, grid_->r_rule.nodes[k / nt], t * v) * v * v);
        }
    }
    return s.value();
}

double discrete_energy(const Field2D& field, const Grid2D& grid, const NonlinearitySpec& nonlin,
                       const AnnulusSpec& annulus) {
    return EnergyModel(grid, nonlin, annulus).energy(field);
}

Field2D discrete_gradient(const Field2D& field, const Grid2D& grid, const NonlinearitySpec& nonlin,
                          const AnnulusSpec& annulus) {
    return EnergyModel(grid, nonlin, annulus).gradient(field);
}

// ---------------------------------------------------------------------------
// Fibering

double fiber_derivative(const Field2D& direction, const EnergyModel& model, double t) {
    return t * model.stiffness().quadratic(direction) - model.nonlinear_pairing(direction, t);
}

FiberingResult fibering_max(const Field2D& phi, const EnergyModel& model) {
    const double A = model.stiffness().quadratic(phi);
    if (!(A > 0.0)) throw DomainError("fibering_max: direction must be nonzero");

    // NaN marks saturation; beyond it f is huge, so it counts as g' < 0.
    const auto gp = [&](double t) {
        try {
            return t * A - model.nonlinear_pairing(phi, t);
        } catch (const SaturationError&) {
            return std::numeric_limits<double>::quiet_NaN();
        }
    };
    const auto positive = [](double v) { return v > 0.0; };

    double lo = 0.0, hi = 0.0;
    double t = 1.0;
    if (positive(gp(t))) {
        lo = t;
        for (int k = 0; k < 200 && hi == 0.0; ++k) {
            t *= 2.0;
            if (positive(gp(t))) lo = t;
            else hi = t;
        }
        if (hi == 0.0) throw SolverError(SolverError::Kind::NoSignChange, "fibering_max: g' > 0 over the whole sweep");
    } else {
        hi = t;
        for (int k = 0; k < 200 && lo == 0.0; ++k) {
            t *= 0.5;
            if (positive(gp(t))) lo = t;
            else hi = t;
        }
        if (lo == 0.0) throw SolverError(SolverError::Kind::NoSignChange, "fibering_max: g' <= 0 near t = 0");
    }
    FiberingResult res;
    res.bracket = {lo, hi};

    // Bisection to a narrow bracket, then safeguarded Newton with g''.
    while (hi - lo > 1e-6 * hi) {
        const double mid = 0.5 * (lo + hi);
        (positive(gp(mid)) ? lo : hi) = mid;
    }
    double ts = 0.5 * (lo + hi);
    double g1 = gp(ts);
    for (int it = 0; it < 50 && std::isfinite(g1); ++it) {
        if (std::abs(g1) <= 1e-13 * ts * A) break;
        (g1 > 0.0 ? lo : hi) = ts;
        const double g2 = A - model.nonlinear_curvature(phi, ts);
        double next = ts - g1 / g2;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (next == ts) break;
        ts = next;
        g1 = gp(ts);
    }
    res.t_star = ts;
    res.derivative_at_t_star = g1;
    res.g_max = 0.5 * ts * ts * A - model.potential(ts * phi);
    return res;
}

FiberingResult fibering_max(const ConeField& direction, const Grid2D& grid, const NonlinearitySpec& nonlin,
                            const AnnulusSpec& annulus) {
    return fibering_max(direction.field, EnergyModel(grid, nonlin, annulus));
}

// ---------------------------------------------------------------------------
// Breaking path test

PathTestResult breaking_path_test(const RadialProfile& profile, double tau, const EnergyModel& model) {
    const int N = model.annulus().N;
    if (!(tau >= 0.0 && tau < 1.0 / (N - 1))) {
        throw DomainError("breaking_path_test: tau must lie in [0, 1/(N-1))");
    }
    const Grid2D& grid = model.grid();
    const Field2D base = lift(profile, grid);
    Field2D phi = base + tau * breaking_direction(profile, grid);
    PathTestResult out;
    out.tau = tau;
    const FiberingResult fib = fibering_max(phi, model);
    out.t_star = fib.t_star;
    out.level_perturbed = fib.g_max;
    out.level_radial = model.energy(base);
    out.margin = out.level_radial - out.level_perturbed;
    return out;
}

PathTestResult breaking_path_test(const RadialProfile& profile, double tau, const Grid2D& grid,
                                  const NonlinearitySpec& nonlin, const AnnulusSpec& annulus) {
    return breaking_path_test(profile, tau, EnergyModel(grid, nonlin, annulus));
}

double extrapolate_margin_coefficient(const std::vector<PathTestResult>& results) {
    if (results.size() < 3) throw DomainError("extrapolate_margin_coefficient: need at least 3 values of tau");
    Eigen::MatrixXd V(static_cast<Eigen::Index>(results.size()), 3);
    Eigen::VectorXd y(static_cast<Eigen::Index>(results.size()));
    for (std::size_t k = 0; k < results.size(); ++k) {
        const double t = results[k].tau;
        if (!(t > 0.0)) throw DomainError("extrapolate_margin_coefficient: tau must be positive");
        const auto row = static_cast<Eigen::Index>(k);
        V(row, 0) = 1.0;
        V(row, 1) = t;
        V(row, 2) = t * t;
        y(row) = results[k].margin / (t * t);
    }
    const Eigen::VectorXd c = V.colPivHouseholderQr().solve(y);
    return c(0);
}

// ---------------------------------------------------------------------------
// Mountain pass

bool is_radial(const Field2D& u) {
    const double threshold = 1e-6 * u.max_abs();
    for (std::size_t i = 0; i < u.nr; ++i) {
        double lo = u(i, 0), hi = u(i, 0);
        for (std::size_t j = 1; j < u.ntheta; ++j) {
            lo = std::min(lo, u(i, j));
            hi = std::max(hi, u(i, j));
        }
        if (hi - lo >= threshold) return false;
    }
    return true;
}

namespace {

// J(b) - J(a) evaluated without cancelling the two (large) energies.
double energy_difference(const EnergyModel& model, const Field2D& a, const Field2D& b) {
    const Field2D diff = b - a;
    const Field2D sum = b + a;
    const double quad = 0.5 * model.stiffness().inner(diff, sum);
    const Grid2D& grid = model.grid();
    const std::size_t nt = grid.ntheta();
    CompensatedSum pot;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double w = grid.quad_weights[k];
        if (w != 0.0) pot.add(w * potential_increment(model.nonlinearity(), grid.r_rule.nodes[k / nt], a.values[k], b.values[k]));
    }
    return quad - pot.value();
}

}  // namespace

Field2D random_cone_field(const Grid2D& grid, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    double coef[4][4];
    for (auto& row : coef)
        for (double& c : row) c = uniform();
    const double R0 = grid.annulus.R0, R1 = grid.annulus.R1;
    const Field2D raw = sample(grid, [&](double r, double th) {
        const double rho = (r - R0) / (R1 - R0);
        double s = 0.0;
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) s += coef[a][b] * std::sin((a + 1) * std::numbers::pi * rho) * std::cos(b * th);
        return s;
    });
    Field2D out = project_cone(raw, grid).field;
    for (std::size_t j = 0; j < out.ntheta; ++j) {
        out(0, j) = 0.0;
        out(out.nr - 1, j) = 0.0;
    }
    return out;
}

MountainPassResult mountain_pass(const EnergyModel& model, const Field2D& seed, const MountainPassOptions& opts,
                                 std::optional<double> radial_energy) {
    const Grid2D& grid = model.grid();
    const StiffnessOperator& K = model.stiffness();
    if (opts.path_points < 2 || opts.redistribute_every < 1 || !(opts.tol > 0.0)) {
        throw DomainError("mountain_pass: invalid options");
    }

    Field2D v = project_cone(seed, grid).field;
    if (v.max_abs() == 0.0) throw DomainError("mountain_pass: seed projects to zero");
    FiberingResult fib = fibering_max(v, model);
    Field2D u = fib.t_star * v;
    double c = fib.g_max;

    MountainPassResult res;
    res.radial_energy = radial_energy;

    // Mountain-pass geometry: J > 0 on a small sphere, J <= 0 at the endpoint.
    const double rho = 1e-2 * std::sqrt(K.quadratic(u));
    res.small_sphere_inf = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= opts.geometry_samples; ++k) {
        const Field2D d = (k == 0) ? v : random_cone_field(grid, opts.seed + static_cast<std::uint64_t>(k));
        const double norm = std::sqrt(K.quadratic(d));
        if (!(norm > 0.0)) continue;
        const double e = model.energy((rho / norm) * d);
        if (!(e > 0.0)) {
            throw SolverError(SolverError::Kind::GeometryViolated, "mountain_pass: J <= 0 on the small sphere");
        }
        res.small_sphere_inf = std::min(res.small_sphere_inf, e);
    }

    // The path runs along the ray through the current maximum: K+1 equally spaced
    // points from 0 to an endpoint e = t_e v with J(e) <= 0, plus the maximum itself.
    const auto resample_path = [&](const Field2D& dir, double t_star) {
        const auto energy_or_sink = [&](double t) {
            try {
                return model.energy(t * dir);
            } catch (const SaturationError&) {
                return -std::numeric_limits<double>::infinity();
            }
        };
        double t_end = 2.0 * t_star;
        double e_end = energy_or_sink(t_end);
        for (int k = 0; k < 60 && e_end > 0.0; ++k) {
            t_end *= 2.0;
            e_end = energy_or_sink(t_end);
        }
        if (e_end > 0.0) {
            throw SolverError(SolverError::Kind::GeometryViolated, "mountain_pass: no endpoint with J <= 0 on the ray");
        }
        res.endpoint_energy = e_end;
        res.path.clear();
        const int K = opts.path_points;
        for (int k = 0; k <= K; ++k) {
            const double t = t_end * k / K;
            res.path.emplace_back(t, k == K ? e_end : energy_or_sink(t));
        }
        const auto pos = std::lower_bound(res.path.begin(), res.path.end(), std::make_pair(t_star, -HUGE_VAL));
        res.path.insert(pos, {t_star, model.energy(t_star * dir)});
    };
    double t_cur = fib.t_star;
    resample_path(v, t_cur);
    res.path_log.emplace_back(0, c);

    double step = 1.0;
    Field2D u_prev, d_prev;
    int it = 0;
    for (; it < opts.max_iterations; ++it) {
        const Field2D G = model.gradient(u);
        const Field2D d = K.solve(G);
        if (it > 0) {
            // Barzilai-Borwein step in the stiffness metric.
            const Field2D s = u - u_prev;
            const Field2D y = d - d_prev;
            const double sy = K.inner(s, y);
            if (sy > 0.0) step = K.quadratic(s) / sy;
        }
        u_prev = u;
        d_prev = d;
        const Field2D pg = u - project_cone(u - d, grid).field;
        res.grad_norm = std::sqrt(std::max(0.0, K.quadratic(pg)));
        if (res.grad_norm <= opts.tol) {
            res.converged = true;
            res.stop_reason = "converged";
            break;
        }

        step = std::min(opts.max_step, step);
        bool accepted = false;
        Field2D w_new, u_new;
        FiberingResult fib_new;
        for (int ls = 0; ls < 60 && !accepted; ++ls, step *= 0.5) {
            w_new = project_cone(u - step * d, grid).field;
            if (w_new.max_abs() == 0.0) continue;
            try {
                fib_new = fibering_max(w_new, model);
            } catch (const SolverError&) {
                continue;
            }
            u_new = fib_new.t_star * w_new;
            const double predicted = dot(G, u - w_new);
            const double change = energy_difference(model, u, u_new);
            accepted = predicted > 0.0 && change < 0.0 && change <= -opts.armijo * predicted;
        }
        if (!accepted) {
            res.stop_reason = "stalled";
            break;
        }
        step *= 2.0;

        u = std::move(u_new);
        v = std::move(w_new);
        t_cur = fib_new.t_star;
        c = model.energy(u);
        res.path_log.emplace_back(it + 1, c);

        if ((it + 1) % opts.redistribute_every == 0) {
            resample_path(v, t_cur);
        }
    }
    resample_path(v, t_cur);
    if (res.stop_reason.empty()) res.stop_reason = "iteration_cap";
    res.iterations = it;
    res.energy = model.energy(u);
    res.is_radial = is_radial(u);
    res.u = ConeField{std::move(u)};
    return res;
}

MountainPassResult mountain_pass(const Grid2D& grid, const NonlinearitySpec& nonlin, const AnnulusSpec& annulus,
                                 const MountainPassOptions& opts) {
    const EnergyModel model(grid, nonlin, annulus);
    try {
        const RadialProfile profile = solve_radial(annulus, nonlin, opts.radial_nodes);
        const Field2D base = lift(profile, grid);
        const Field2D seed = base + opts.tau0 * breaking_direction(profile, grid);
        MountainPassResult res = mountain_pass(model, seed, opts, model.energy(base));
        res.seed_kind = "radial";
        return res;
    } catch (const SolverError& e) {
        if (e.kind() != SolverError::Kind::NoBracket && e.kind() != SolverError::Kind::NewtonDiverged) throw;
    }
    const double R0 = annulus.R0, R1 = annulus.R1;
    const Field2D bump = sample(grid, [&](double r, double th) {
        const double a = 1.0 - th / (0.5 * std::numbers::pi);
        return std::sin(std::numbers::pi * (r - R0) / (R1 - R0)) * a * a;
    });
    MountainPassResult res = mountain_pass(model, bump, opts);
    res.seed_kind = "bump";
    return res;
}

}  // namespace annulus
