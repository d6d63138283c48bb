#include "annulus/commands.hpp"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include <Eigen/Core>
#include <boost/version.hpp>
#include <json.hpp>

#include "annulus/conevar.hpp"
#include "annulus/errors.hpp"
#include "annulus/orlicz.hpp"
#include "annulus/radial.hpp"
#include "annulus/stability.hpp"

#ifndef ANNULUS_VERSION
#define ANNULUS_VERSION "unknown"
#endif

namespace annulus {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// JSON has no infinities; they are written as strings.
json num(double x) {
    if (std::isfinite(x)) return x;
    return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
}

struct Context {
    fs::path dir;
    bool verbose = false;
    std::vector<std::string> files;
    Summary summary;

    void log(const std::string& msg) const {
        if (verbose) std::fprintf(stderr, "[%s] %s\n", dir.filename().string().c_str(), msg.c_str());
    }
    void add(const std::string& key, double x) { summary.emplace_back(key, fmt17(x)); }
    void add(const std::string& key, const std::string& s) { summary.emplace_back(key, s); }
    void add_flag(const std::string& key, bool b) { summary.emplace_back(key, b ? "true" : "false"); }

    void write_json(const std::string& name, const json& j) {
        std::ofstream out(dir / name);
        out << j.dump(2) << '\n';
        if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
        files.push_back(name);
    }

    void write_csv(const std::string& name, const std::vector<std::string>& header,
                   const std::vector<std::vector<double>>& rows) {
        std::FILE* f = std::fopen((dir / name).string().c_str(), "w");
        if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
        for (std::size_t k = 0; k < header.size(); ++k) std::fprintf(f, "%s%s", k ? "," : "", header[k].c_str());
        std::fputc('\n', f);
        for (const auto& row : rows) {
            for (std::size_t k = 0; k < row.size(); ++k) std::fprintf(f, "%s%.17g", k ? "," : "", row[k]);
            std::fputc('\n', f);
        }
        const bool ok = std::fclose(f) == 0;
        if (!ok) throw std::runtime_error("cannot write " + (dir / name).string());
        files.push_back(name);
    }
};

json annulus_json(const AnnulusSpec& a) {
    return {{"N", a.N}, {"R0", a.R0}, {"R1", a.R1}, {"lambda", a.lambda}, {"truncated", a.truncated}};
}

RadialProfile solve_profile(const RunConfig& cfg, Context& ctx) {
    ctx.log("solving radial problem on " + std::to_string(cfg.radial_nodes) + " nodes");
    RadialProfile p = solve_radial(cfg.annulus, cfg.nonlin, cfg.radial_nodes, cfg.radial);
    const double umax = *std::max_element(p.u.begin(), p.u.end());
    if (std::abs(p.u.front()) > 1e-10 || std::abs(p.u.back()) > 1e-10) {
        throw InvariantViolation("radial profile does not vanish at the boundary");
    }
    for (double x : p.u) {
        if (x < -1e-12 * umax) throw InvariantViolation("radial profile is not nonnegative");
    }
    ctx.log("radial residual " + fmt17(p.residual_inf) + ", energy " + fmt17(p.energy));
    return p;
}

void cmd_radial(const RunConfig& cfg, Context& ctx) {
    const RadialProfile p = solve_profile(cfg, ctx);
    const double identity = radial_identity_residual(p, cfg.nonlin, cfg.annulus);
    const double hardy = hardy_ratio(p, cfg.annulus);

    std::vector<std::vector<double>> rows;
    rows.reserve(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) rows.push_back({p.r[i], p.u[i], p.du[i]});
    ctx.write_csv("profile.csv", {"r", "u", "du"}, rows);

    ctx.write_json("radial.json", {{"annulus", annulus_json(cfg.annulus)},
                                   {"nonlinearity", cfg.nonlin.family_name()},
                                   {"n_nodes", p.size()},
                                   {"energy", num(p.energy)},
                                   {"residual_inf", num(p.residual_inf)},
                                   {"identity_residual", num(identity)},
                                   {"hardy_ratio", num(hardy)},
                                   {"slope", num(p.slope)},
                                   {"newton_iterations", p.newton_iterations},
                                   {"u_max", num(*std::max_element(p.u.begin(), p.u.end()))},
                                   {"boundary_values", {num(p.u.front()), num(p.u.back())}}});
    ctx.add("energy", p.energy);
    ctx.add("residual_inf", p.residual_inf);
    ctx.add("identity_residual", identity);
    ctx.add("hardy_ratio", hardy);
    ctx.add("slope", p.slope);
}

void cmd_stability(const RunConfig& cfg, Context& ctx) {
    const RadialProfile p = solve_profile(cfg, ctx);
    std::optional<Grid2D> grid;
    if (cfg.cross_check || !cfg.taus.empty()) {
        grid = build_grid(cfg.annulus, cfg.check_nr, cfg.check_ntheta, cfg.rule);
    }
    ctx.log("assembling stability report");
    const StabilityReport rep =
        symmetry_breaking_report(cfg.annulus, cfg.nonlin, p, cfg.cross_check ? &*grid : nullptr, cfg.angular_nodes);
    const AssumptionReport assumptions = assumption_report(cfg.nonlin, cfg.annulus, cfg.assumption_samples);
    const ThresholdVerdict threshold = threshold_check(cfg.nonlin, cfg.annulus);
    const AngularMode mode = angular_mode(cfg.annulus.N, cfg.angular_nodes);
    const AngularResidual ares = angular_residual(mode);
    const AngularIntegrals aint = angular_integrals(mode);

    const double rayleigh_scale = std::max(1.0, std::abs(aint.dy2));
    if (std::abs(aint.y) > 1e-10 || std::abs(aint.dy2 - 2.0 * cfg.annulus.N * aint.y2) > 1e-10 * rayleigh_scale) {
        throw InvariantViolation("angular identities fail at the configured angular resolution");
    }
    if (rep.sufficient_condition && !(rep.D < 0.0)) {
        throw InvariantViolation("sufficient threshold holds but the stability indicator is not negative");
    }

    json path = json::array();
    std::vector<std::vector<double>> rows;
    std::vector<PathTestResult> results;
    if (!cfg.taus.empty()) {
        const EnergyModel model(*grid, cfg.nonlin, cfg.annulus);
        for (double tau : cfg.taus) {
            ctx.log("path test tau = " + fmt17(tau));
            const PathTestResult r = breaking_path_test(p, tau, model);
            results.push_back(r);
            const double ratio = tau > 0.0 ? r.margin / (tau * tau) : 0.0;
            rows.push_back({tau, r.t_star, r.level_radial, r.level_perturbed, r.margin, ratio});
            path.push_back({{"tau", tau}, {"t_star", num(r.t_star)}, {"level_radial", num(r.level_radial)},
                            {"level_perturbed", num(r.level_perturbed)}, {"margin", num(r.margin)},
                            {"margin_over_tau2", num(ratio)}});
        }
        ctx.write_csv("path_test.csv", {"tau", "t_star", "level_radial", "level_perturbed", "margin", "margin_over_tau2"},
                      rows);
    }
    const double sv_ref = rep.second_variation_2d.value_or(rep.second_variation);
    std::optional<double> coefficient;
    const bool fit_possible =
        results.size() >= 3 && std::all_of(results.begin(), results.end(), [](const auto& r) { return r.tau > 0.0; });
    if (fit_possible) coefficient = extrapolate_margin_coefficient(results);

    json j = {{"annulus", annulus_json(cfg.annulus)},
              {"nonlinearity", cfg.nonlin.family_name()},
              {"H", num(rep.H)},
              {"delta_required", num(rep.delta_required)},
              {"delta_certified", num(rep.delta_certified)},
              {"sufficient_condition", rep.sufficient_condition},
              {"threshold", {{"required", num(threshold.required)},
                             {"actual", num(threshold.actual)},
                             {"strict", threshold.strict},
                             {"satisfied", threshold.satisfied},
                             {"note", threshold.note}}},
              {"D", num(rep.D)},
              {"angular_factor", num(rep.angular_factor)},
              {"second_variation", num(rep.second_variation)},
              {"verdict", to_string(rep.verdict)},
              {"angular", {{"residual", num(ares.max_residual)},
                           {"mean", num(aint.y)},
                           {"rayleigh_lhs", num(aint.dy2)},
                           {"rayleigh_rhs", num(2.0 * cfg.annulus.N * aint.y2)}}},
              {"assumptions", {{"sigma", num(assumptions.sigma)},
                               {"delta_max", num(assumptions.delta_max)},
                               {"mu", num(assumptions.mu)},
                               {"sampled_delta_inf", num(assumptions.sampled_delta_inf)},
                               {"sample_count", assumptions.sample_count},
                               {"violations", assumptions.sampled_violations.size()}}},
              {"radial", {{"energy", num(p.energy)}, {"residual_inf", num(p.residual_inf)}, {"slope", num(p.slope)}}},
              {"path_test", path}};
    if (rep.second_variation_2d) {
        j["second_variation_2d"] = num(*rep.second_variation_2d);
        j["cross_check"] = num(*rep.cross_check);
        j["grid"] = {{"nr", cfg.check_nr}, {"ntheta", cfg.check_ntheta}};
    }
    if (coefficient) {
        j["margin_coefficient"] = num(*coefficient);
        j["half_negative_second_variation"] = num(-0.5 * sv_ref);
        j["margin_coefficient_relative_error"] = num(std::abs(*coefficient + 0.5 * sv_ref) / std::abs(0.5 * sv_ref));
    }
    ctx.write_json("stability.json", j);

    ctx.add("H", rep.H);
    ctx.add("delta_required", rep.delta_required);
    ctx.add("delta_certified", rep.delta_certified);
    ctx.add("D", rep.D);
    ctx.add("second_variation", rep.second_variation);
    ctx.add("verdict", to_string(rep.verdict));
    if (rep.cross_check) ctx.add("cross_check", *rep.cross_check);
    if (results.size() == 1) {
        ctx.add("tau", results[0].tau);
        ctx.add("margin", results[0].margin);
        if (results[0].tau > 0.0) ctx.add("margin_over_tau2", results[0].margin / (results[0].tau * results[0].tau));
    }
    if (coefficient) ctx.add("margin_coefficient", *coefficient);
}

void cmd_mp2d(const RunConfig& cfg, Context& ctx) {
    const Grid2D grid = build_grid(cfg.annulus, cfg.nr, cfg.ntheta, cfg.rule);
    ctx.log("mountain pass on " + std::to_string(cfg.nr) + "x" + std::to_string(cfg.ntheta));
    const MountainPassResult res = mountain_pass(grid, cfg.nonlin, cfg.annulus, cfg.mp);
    const Field2D& u = res.u.field;

    std::vector<std::vector<double>> rows;
    rows.reserve(u.size());
    for (std::size_t i = 0; i < u.nr; ++i) {
        for (std::size_t j = 0; j < u.ntheta; ++j) rows.push_back({grid.r_rule.nodes[i], grid.theta_rule.nodes[j], u(i, j)});
    }
    ctx.write_csv("candidate.csv", {"r", "theta", "u"}, rows);
    rows.clear();
    for (const auto& [it, e] : res.path_log) rows.push_back({static_cast<double>(it), e});
    ctx.write_csv("path_log.csv", {"iteration", "path_max"}, rows);
    rows.clear();
    for (const auto& [t, e] : res.path) rows.push_back({t, e});
    ctx.write_csv("path.csv", {"t", "energy"}, rows);

    json j = {{"annulus", annulus_json(cfg.annulus)},
              {"nonlinearity", cfg.nonlin.family_name()},
              {"grid", {{"nr", cfg.nr}, {"ntheta", cfg.ntheta}}},
              {"energy", num(res.energy)},
              {"level", "candidate"},
              {"grad_norm", num(res.grad_norm)},
              {"tol", cfg.mp.tol},
              {"iterations", res.iterations},
              {"converged", res.converged},
              {"stop_reason", res.stop_reason},
              {"is_radial", res.is_radial},
              {"u_max", num(u.max_abs())},
              {"small_sphere_inf", num(res.small_sphere_inf)},
              {"endpoint_energy", num(res.endpoint_energy)},
              {"seed_kind", res.seed_kind}};
    if (res.radial_energy) {
        j["radial_energy"] = num(*res.radial_energy);
        j["energy_gap"] = num(*res.radial_energy - res.energy);
    }
    ctx.write_json("mountain_pass.json", j);

    ctx.add("energy", res.energy);
    if (res.radial_energy) ctx.add("radial_energy", *res.radial_energy);
    ctx.add("grad_norm", res.grad_norm);
    ctx.add("iterations", static_cast<double>(res.iterations));
    ctx.add_flag("converged", res.converged);
    ctx.add_flag("is_radial", res.is_radial);

    if (!in_cone(u)) throw InvariantViolation("mountain-pass candidate left the cone");
    if (!(res.energy > 0.0) || res.energy < res.small_sphere_inf) {
        throw InvariantViolation("mountain-pass level is below the small-sphere infimum");
    }
    for (std::size_t k = 1; k < res.path_log.size(); ++k) {
        const double prev = res.path_log[k - 1].second, cur = res.path_log[k].second;
        if (cur > prev + 1e-12 * std::abs(prev)) throw InvariantViolation("path maximum increased during descent");
    }
    if (!res.converged) {
        const auto kind = res.stop_reason == "stalled" ? SolverError::Kind::LineSearchStalled : SolverError::Kind::IterationCap;
        throw SolverError(kind, "mountain pass stopped before reaching the tolerance (grad_norm " + fmt17(res.grad_norm) + ")");
    }
}

void cmd_tmprobe(const RunConfig& cfg, Context& ctx) {
    const Grid2D grid = build_grid(cfg.annulus, cfg.nr, cfg.ntheta, cfg.rule);
    std::vector<double> alphas = cfg.alphas;
    std::sort(alphas.begin(), alphas.end());
    std::vector<std::vector<double>> rows;
    json entries = json::array();
    double overall_max = 0.0;
    int saturated = 0;
    for (double alpha : alphas) {
        ctx.log("probe alpha = " + fmt17(alpha));
        const TMProbeSummary s = tm_probe(grid, alpha, cfg.probe_samples, cfg.seed);
        rows.push_back({alpha, s.max_modulus, s.mean_modulus, static_cast<double>(s.saturated_count)});
        entries.push_back({{"alpha", alpha}, {"max_modulus", num(s.max_modulus)}, {"mean_modulus", num(s.mean_modulus)},
                           {"saturated_count", s.saturated_count}});
        overall_max = std::max(overall_max, s.max_modulus);
        saturated += s.saturated_count;
    }
    ctx.write_csv("tmprobe.csv", {"alpha", "max_modulus", "mean_modulus", "saturated_count"}, rows);
    ctx.write_json("tmprobe.json", {{"annulus", annulus_json(cfg.annulus)},
                                    {"grid", {{"nr", cfg.nr}, {"ntheta", cfg.ntheta}}},
                                    {"samples", cfg.probe_samples},
                                    {"seed", cfg.seed},
                                    {"ladder", entries}});
    if (alphas.size() == 1) ctx.add("alpha", alphas[0]);
    ctx.add("max_modulus", overall_max);
    ctx.add("saturated_count", static_cast<double>(saturated));
    for (std::size_t k = 0; k < rows.size(); ++k) {
        if (!std::isfinite(rows[k][1])) throw InvariantViolation("non-finite modulus");
        if (k > 0 && rows[k][1] < rows[k - 1][1]) throw InvariantViolation("max modulus decreased with alpha");
    }
}

void write_error(Context& ctx, const CommandResult& r, int line, const std::string& key, const std::string& detail) {
    json j = {{"exit_code", r.exit_code}, {"kind", r.error_kind}, {"message", r.message}};
    if (line > 0) j["line"] = line;
    if (!key.empty()) j["key"] = key;
    if (!detail.empty()) j["detail"] = detail;
    ctx.write_json("error.json", j);
}

CommandResult run_sweep(const RunConfig& cfg, const ConfigTable& table, const CommandOptions& opts, Context& ctx);

}  // namespace

std::vector<std::pair<std::string, std::string>> version_info() {
    return {{"annulus_sb", ANNULUS_VERSION},
            {"compiler", __VERSION__},
            {"cxx_standard", std::to_string(__cplusplus)},
            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION)},
            {"boost", BOOST_LIB_VERSION},
            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
}

namespace {

CommandResult run_impl(const std::string& command, const ConfigTable& config, const CommandOptions& opts,
                       const ConfigError* load_error) {
    static const std::set<std::string> known{"radial", "stability", "mp2d", "tmprobe", "sweep"};
    CommandResult result;
    ConfigTable table = config;
    if (opts.seed) table.set("run.seed", ConfigValue{static_cast<double>(*opts.seed), 0});
    const std::string canonical = table.canonical();

    Context ctx;
    ctx.verbose = opts.verbose;
    ctx.dir = opts.out;
    if (ctx.dir.empty()) {
        const ConfigValue* v = table.find("output.directory");
        const std::string* s = v ? std::get_if<std::string>(&v->value) : nullptr;
        ctx.dir = s ? fs::path(*s) : fs::path("out");
    }
    result.out_dir = ctx.dir;

    int err_line = 0;
    std::string err_key, err_detail;
    std::uint64_t seed = 0;
    try {
        fs::create_directories(ctx.dir);
    } catch (const std::exception& e) {
        result.exit_code = kExitConfig;
        result.error_kind = "OutputDirectory";
        result.message = e.what();
        return result;
    }
    try {
        if (load_error) throw *load_error;
        if (!known.count(command)) throw ConfigError(0, "", "unknown command '" + command + "'");
        if (opts.seed && *opts.seed >= (std::uint64_t{1} << 53)) throw ConfigError(0, "run.seed", "--seed must be below 2^53");
        const RunConfig cfg = build_run_config(table);
        seed = cfg.seed;
        if (command == "radial") cmd_radial(cfg, ctx);
        else if (command == "stability") cmd_stability(cfg, ctx);
        else if (command == "mp2d") cmd_mp2d(cfg, ctx);
        else if (command == "tmprobe") cmd_tmprobe(cfg, ctx);
        else {
            const CommandResult sweep = run_sweep(cfg, table, opts, ctx);
            result.exit_code = sweep.exit_code;
            result.error_kind = sweep.error_kind;
            result.message = sweep.message;
        }
    } catch (const ConfigError& e) {
        result.exit_code = kExitConfig;
        result.error_kind = "ConfigError";
        result.message = e.what();
        err_line = e.line();
        err_key = e.key();
    } catch (const DomainError& e) {
        result.exit_code = kExitConfig;
        result.error_kind = "DomainError";
        result.message = e.what();
    } catch (const SolverError& e) {
        result.exit_code = kExitSolver;
        result.error_kind = to_string(e.kind());
        result.message = e.what();
        err_detail = e.detail();
    } catch (const SaturationError& e) {
        result.exit_code = kExitSolver;
        result.error_kind = "Saturation";
        result.message = e.what();
    } catch (const InvariantViolation& e) {
        result.exit_code = kExitInvariant;
        result.error_kind = "InvariantViolation";
        result.message = e.what();
    } catch (const std::exception& e) {
        result.exit_code = kExitInvariant;
        result.error_kind = "Internal";
        result.message = e.what();
    }
    result.summary = ctx.summary;
    try {
        if (result.exit_code != kExitOk && command != "sweep") write_error(ctx, result, err_line, err_key, err_detail);
        if (command == "sweep" && result.exit_code == kExitConfig) write_error(ctx, result, err_line, err_key, err_detail);
        char hash[17];
        std::snprintf(hash, sizeof hash, "%016" PRIx64, fnv1a64(canonical));
        json versions = json::object();
        for (const auto& [k, v] : version_info()) versions[k] = v;
        ctx.write_json("manifest.json", {{"command", command},
                                         {"config_hash", std::string("fnv1a64:") + hash},
                                         {"config", canonical},
                                         {"seed", seed},
                                         {"versions", versions},
                                         {"exit_code", result.exit_code},
                                         {"files", ctx.files}});
    } catch (const std::exception& e) {
        if (result.exit_code == kExitOk) {
            result.exit_code = kExitInvariant;
            result.error_kind = "Internal";
            result.message = e.what();
        }
    }
    return result;
}

}  // namespace

CommandResult run_command(const std::string& command, const ConfigTable& config, const CommandOptions& opts) {
    return run_impl(command, config, opts, nullptr);
}

CommandResult run_command_file(const std::string& command, const std::filesystem::path& config_path,
                               const CommandOptions& opts) {
    ConfigTable table;
    try {
        table = ConfigTable::load(config_path);
    } catch (const ConfigError& e) {
        return run_impl(command, ConfigTable{}, opts, &e);
    }
    return run_command(command, table, opts);
}

namespace {

CommandResult run_sweep(const RunConfig& cfg, const ConfigTable& table, const CommandOptions& opts, Context& ctx) {
    if (cfg.sweep_parameter.empty()) throw ConfigError(0, "sweep.parameter", "sweep needs [sweep] command, parameter and values");
    const std::size_t n = cfg.sweep_values.size();
    std::vector<CommandResult> results(n);
    std::atomic<std::size_t> next{0};
    const int jobs = std::clamp(opts.jobs, 1, static_cast<int>(n));
    const auto worker = [&] {
        for (std::size_t k = next++; k < n; k = next++) {
            ConfigTable entry = table;
            entry.set(cfg.sweep_parameter, ConfigValue{cfg.sweep_values[k], 0});
            char name[32];
            std::snprintf(name, sizeof name, "entry_%03zu", k);
            CommandOptions sub;
            sub.out = ctx.dir / name;
            sub.verbose = opts.verbose;
            results[k] = run_command(cfg.sweep_command, entry, sub);
        }
    };
    ctx.log("sweeping " + cfg.sweep_parameter + " over " + std::to_string(n) + " values with " + std::to_string(jobs) + " jobs");
    std::vector<std::thread> pool;
    for (int t = 1; t < jobs; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::vector<std::string> columns;
    for (const auto& r : results) {
        for (const auto& [k, v] : r.summary) {
            if (std::find(columns.begin(), columns.end(), k) == columns.end()) columns.push_back(k);
        }
    }
    std::ofstream out(ctx.dir / "index.csv");
    out << "index," << cfg.sweep_parameter << ",exit_code,status,directory";
    for (const auto& c : columns) out << ',' << c;
    out << '\n';
    CommandResult overall;
    for (std::size_t k = 0; k < n; ++k) {
        const CommandResult& r = results[k];
        out << k << ',' << fmt17(cfg.sweep_values[k]) << ',' << r.exit_code << ',' << (r.exit_code ? r.error_kind : "ok") << ','
            << r.out_dir.filename().string();
        std::map<std::string, std::string> m(r.summary.begin(), r.summary.end());
        for (const auto& c : columns) out << ',' << (m.count(c) ? m[c] : "");
        out << '\n';
        if (r.exit_code > overall.exit_code) {
            overall.exit_code = r.exit_code;
            overall.error_kind = r.error_kind;
            overall.message = "entry " + std::to_string(k) + ": " + r.message;
        }
    }
    if (!out) throw std::runtime_error("cannot write index.csv");
    ctx.files.push_back("index.csv");
    ctx.add("entries", static_cast<double>(n));
    return overall;
}

}  // namespace

}  // namespace annulus
