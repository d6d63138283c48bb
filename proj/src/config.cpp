#include "annulus/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "annulus/errors.hpp"

namespace annulus {

ConfigError::ConfigError(int line, std::string key, const std::string& message)
    : std::runtime_error((line > 0 ? "line " + std::to_string(line) + ": " : std::string()) +
                         (key.empty() ? std::string() : "'" + key + "': ") + message),
      line_(line),
      key_(std::move(key)) {}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

bool valid_key(std::string_view k) {
    if (k.empty()) return false;
    for (char c : k) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
    }
    return true;
}

// Drops a trailing comment, respecting double-quoted strings.
std::string_view strip_comment(std::string_view line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '\\' && quoted) {
            ++i;
        } else if (line[i] == '"') {
            quoted = !quoted;
        } else if (line[i] == '#' && !quoted) {
            return line.substr(0, i);
        }
    }
    return line;
}

bool parse_number(std::string_view s, double& out) {
    std::string clean;
    for (char c : s) {
        if (c != '_') clean.push_back(c);
    }
    if (clean.empty()) return false;
    if (clean.front() == '+') clean.erase(0, 1);
    const char* first = clean.data();
    const char* last = first + clean.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && std::isfinite(out);
}

ConfigValue parse_value(std::string_view raw, int line, const std::string& key) {
    ConfigValue v;
    v.line = line;
    if (raw.empty()) throw ConfigError(line, key, "missing value");
    if (raw.front() == '"') {
        std::string s;
        std::size_t i = 1;
        for (; i < raw.size() && raw[i] != '"'; ++i) {
            if (raw[i] == '\\' && i + 1 < raw.size()) {
                const char e = raw[++i];
                s.push_back(e == 'n' ? '\n' : e == 't' ? '\t' : e);
            } else {
                s.push_back(raw[i]);
            }
        }
        if (i >= raw.size() || !trim(raw.substr(i + 1)).empty()) throw ConfigError(line, key, "malformed string");
        v.value = std::move(s);
        return v;
    }
    if (raw == "true" || raw == "false") {
        v.value = (raw == "true");
        return v;
    }
    if (raw.front() == '[') {
        if (raw.back() != ']') throw ConfigError(line, key, "unterminated array (arrays must fit on one line)");
        std::vector<double> xs;
        std::string_view body = trim(raw.substr(1, raw.size() - 2));
        while (!body.empty()) {
            const std::size_t comma = body.find(',');
            const std::string_view item = trim(body.substr(0, comma));
            double x = 0.0;
            if (!parse_number(item, x)) {
                throw ConfigError(line, key, "array entries must be numbers, got '" + std::string(item) + "'");
            }
            xs.push_back(x);
            if (comma == std::string_view::npos) break;
            body = trim(body.substr(comma + 1));
        }
        v.value = std::move(xs);
        return v;
    }
    double x = 0.0;
    if (!parse_number(raw, x)) throw ConfigError(line, key, "cannot parse value '" + std::string(raw) + "'");
    v.value = x;
    return v;
}

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

ConfigTable ConfigTable::parse(std::string_view text) {
    ConfigTable table;
    std::string section;
    int line_no = 0;
    while (!text.empty()) {
        const std::size_t nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = (nl == std::string_view::npos) ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        line = trim(strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(line_no, "", "malformed section header");
            const std::string_view name = trim(line.substr(1, line.size() - 2));
            if (!valid_key(name)) throw ConfigError(line_no, "", "invalid section name '" + std::string(name) + "'");
            section = std::string(name);
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError(line_no, "", "expected key = value");
        const std::string_view k = trim(line.substr(0, eq));
        if (!valid_key(k)) throw ConfigError(line_no, "", "invalid key '" + std::string(k) + "'");
        const std::string key = section.empty() ? std::string(k) : section + "." + std::string(k);
        if (table.entries_.count(key)) {
            throw ConfigError(line_no, key, "duplicate key (first set on line " +
                                                std::to_string(table.entries_[key].line) + ")");
        }
        table.entries_[key] = parse_value(trim(line.substr(eq + 1)), line_no, key);
    }
    return table;
}

ConfigTable ConfigTable::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(0, "", "cannot open config file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

const ConfigValue* ConfigTable::find(const std::string& key) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
}

std::string ConfigTable::canonical() const {
    std::string out;
    for (const auto& [key, v] : entries_) {
        out += key + " = ";
        std::visit(
            [&](const auto& x) {
                using T = std::decay_t<decltype(x)>;
                if constexpr (std::is_same_v<T, bool>) {
                    out += x ? "true" : "false";
                } else if constexpr (std::is_same_v<T, double>) {
                    out += format_double(x);
                } else if constexpr (std::is_same_v<T, std::string>) {
                    out += '"';
                    for (char c : x) {
                        if (c == '"' || c == '\\') out += '\\';
                        out += c;
                    }
                    out += '"';
                } else {
                    out += '[';
                    for (std::size_t i = 0; i < x.size(); ++i) out += (i ? ", " : "") + format_double(x[i]);
                    out += ']';
                }
            },
            v.value);
        out += '\n';
    }
    return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace {

class Reader {
public:
    explicit Reader(const ConfigTable& t) : table_(t) {}

    int line_of(const std::string& key) const {
        const ConfigValue* v = table_.find(key);
        return v ? v->line : 0;
    }

    void number(const std::string& key, double& out, const std::function<bool(double)>& ok, const char* what) {
        used_.insert(key);
        const ConfigValue* v = table_.find(key);
        if (!v) return;
        const double* x = std::get_if<double>(&v->value);
        if (!x) throw ConfigError(v->line, key, "expected a number");
        if (!ok(*x)) throw ConfigError(v->line, key, std::string("must be ") + what);
        out = *x;
    }

    template <class Int>
    void integer(const std::string& key, Int& out, double min, double max = 9.007199254740992e15) {
        double x = static_cast<double>(out);
        number(key, x, [&](double y) { return y == std::floor(y) && y >= min && y <= max; },
               ("an integer >= " + format_double(min)).c_str());
        out = static_cast<Int>(x);
    }

    void boolean(const std::string& key, bool& out) {
        used_.insert(key);
        const ConfigValue* v = table_.find(key);
        if (!v) return;
        const bool* b = std::get_if<bool>(&v->value);
        if (!b) throw ConfigError(v->line, key, "expected true or false");
        out = *b;
    }

    void string(const std::string& key, std::string& out) {
        used_.insert(key);
        const ConfigValue* v = table_.find(key);
        if (!v) return;
        const std::string* s = std::get_if<std::string>(&v->value);
        if (!s) throw ConfigError(v->line, key, "expected a quoted string");
        out = *s;
    }

    // A scalar is accepted as a one-element list (sweeps override lists this way).
    void list(const std::string& key, std::vector<double>& out) {
        used_.insert(key);
        const ConfigValue* v = table_.find(key);
        if (!v) return;
        if (const double* x = std::get_if<double>(&v->value)) {
            out = {*x};
        } else if (const auto* xs = std::get_if<std::vector<double>>(&v->value)) {
            out = *xs;
        } else {
            throw ConfigError(v->line, key, "expected a number or a numeric array");
        }
    }

    void reject_unknown() const {
        for (const auto& [key, v] : table_.entries()) {
            if (!used_.count(key)) throw ConfigError(v.line, key, "unknown key");
        }
    }

private:
    const ConfigTable& table_;
    std::set<std::string> used_;
};

const auto positive = [](double x) { return x > 0.0; };
const auto nonnegative = [](double x) { return x >= 0.0; };

}  // namespace

RunConfig build_run_config(const ConfigTable& table) {
    RunConfig cfg;
    Reader rd(table);

    // annulus
    int N = cfg.annulus.N;
    rd.integer("annulus.N", N, 3, 64);
    cfg.annulus.N = N;
    rd.number("annulus.R0", cfg.annulus.R0, positive, "> 0");
    rd.number("annulus.R1", cfg.annulus.R1, positive, "> 0");
    rd.number("annulus.lambda", cfg.annulus.lambda, nonnegative, ">= 0");
    rd.boolean("annulus.truncated", cfg.annulus.truncated);
    if (!(cfg.annulus.R0 < cfg.annulus.R1)) {
        const std::string key = rd.line_of("annulus.R1") >= rd.line_of("annulus.R0") ? "annulus.R1" : "annulus.R0";
        throw ConfigError(rd.line_of(key), key, "R0 must be smaller than R1");
    }
    if (cfg.annulus.truncated && !(cfg.annulus.lambda > 0.0)) {
        throw ConfigError(rd.line_of("annulus.lambda"), "annulus.lambda", "must be > 0 for a truncated annulus");
    }

    // nonlinearity
    std::string family = "power";
    rd.string("nonlinearity.family", family);
    double beta = 1.5, p = 4.0, pfrak = 0.0, slope = 0.0, weight = 1.0;
    int m = 1;
    rd.number("nonlinearity.beta", beta, [](double b) { return b > 0.0 && b < 2.0; }, "in (0, 2)");
    rd.integer("nonlinearity.m", m, 1, 100);
    rd.number("nonlinearity.p", p, [](double x) { return x > 2.0; }, "> 2");
    rd.number("nonlinearity.pfrak", pfrak, positive, "> 0");
    rd.number("nonlinearity.slope", slope, nonnegative, ">= 0");
    rd.number("nonlinearity.weight", weight, positive, "> 0");
    std::vector<double> wr, ww;
    rd.list("nonlinearity.weight_r", wr);
    rd.list("nonlinearity.weight_w", ww);
    if (!table.contains("nonlinearity.pfrak")) pfrak = p;

    WeightSpec w = WeightSpec::constant(weight);
    if (!wr.empty() || !ww.empty()) {
        if (table.contains("nonlinearity.weight")) {
            throw ConfigError(rd.line_of("nonlinearity.weight"), "nonlinearity.weight",
                              "give either a constant weight or weight_r/weight_w, not both");
        }
        w = WeightSpec::tabulated(wr, ww);
    }
    const std::string family_key = "nonlinearity.family";
    if (family == "power") {
        if (pfrak < p) throw ConfigError(rd.line_of("nonlinearity.pfrak"), "nonlinearity.pfrak", "must be >= p");
        cfg.nonlin = NonlinearitySpec::power(p, pfrak, w);
    } else if (family == "exponential") {
        if (!(beta * (m + 1) > 2.0)) {
            throw ConfigError(rd.line_of("nonlinearity.beta"), "nonlinearity.beta", "beta*(m+1) must exceed 2");
        }
        cfg.nonlin = NonlinearitySpec::exponential(beta, m, w);
    } else if (family == "linear") {
        cfg.nonlin = NonlinearitySpec::linear(slope, w);
    } else {
        throw ConfigError(rd.line_of(family_key), family_key, "unknown family '" + family + "' (power, exponential, linear)");
    }
    try {
        cfg.annulus.validate();
    } catch (const DomainError& e) {
        throw ConfigError(rd.line_of("annulus.N"), "annulus", e.what());
    }
    try {
        cfg.nonlin.validate();
    } catch (const DomainError& e) {
        throw ConfigError(rd.line_of(family_key), "nonlinearity", e.what());
    }

    // grid
    rd.integer("grid.nr", cfg.nr, 8);
    rd.integer("grid.ntheta", cfg.ntheta, 8);
    std::string rule = "gll5";
    rd.string("grid.rule", rule);
    try {
        cfg.rule = parse_rule(rule);
    } catch (const DomainError& e) {
        throw ConfigError(rd.line_of("grid.rule"), "grid.rule", e.what());
    }

    // radial
    rd.integer("radial.nodes", cfg.radial_nodes, 11);
    rd.number("radial.tol", cfg.radial.tol, positive, "> 0");
    rd.integer("radial.max_newton", cfg.radial.max_newton, 1);
    rd.number("radial.slope_min", cfg.radial.slope_min, positive, "> 0");
    rd.number("radial.slope_max", cfg.radial.slope_max, positive, "> 0");
    rd.integer("radial.slope_ladder", cfg.radial.slope_ladder, 2);
    if (!(cfg.radial.slope_min < cfg.radial.slope_max)) {
        throw ConfigError(rd.line_of("radial.slope_max"), "radial.slope_max", "must exceed slope_min");
    }

    // stability
    rd.integer("stability.angular_nodes", cfg.angular_nodes, 8);
    rd.boolean("stability.cross_check", cfg.cross_check);
    rd.integer("stability.check_nr", cfg.check_nr, 8);
    rd.integer("stability.check_ntheta", cfg.check_ntheta, 8);
    rd.list("stability.tau", cfg.taus);
    for (double t : cfg.taus) {
        if (!(t >= 0.0 && t < 1.0 / (cfg.annulus.N - 1))) {
            throw ConfigError(rd.line_of("stability.tau"), "stability.tau", "entries must lie in [0, 1/(N-1))");
        }
    }
    rd.integer("stability.assumption_samples", cfg.assumption_samples, 100);

    // mountain pass
    rd.number("mountain_pass.tol", cfg.mp.tol, positive, "> 0");
    rd.integer("mountain_pass.max_iterations", cfg.mp.max_iterations, 1);
    rd.integer("mountain_pass.path_points", cfg.mp.path_points, 2);
    rd.integer("mountain_pass.redistribute_every", cfg.mp.redistribute_every, 1);
    rd.number("mountain_pass.tau0", cfg.mp.tau0, [&](double t) { return t >= 0.0 && t < 1.0 / (cfg.annulus.N - 1); },
              "in [0, 1/(N-1))");
    rd.number("mountain_pass.armijo", cfg.mp.armijo, [](double a) { return a > 0.0 && a < 1.0; }, "in (0, 1)");
    rd.number("mountain_pass.max_step", cfg.mp.max_step, positive, "> 0");
    rd.integer("mountain_pass.geometry_samples", cfg.mp.geometry_samples, 0);
    cfg.mp.radial_nodes = cfg.radial_nodes;

    // tmprobe
    rd.list("tmprobe.alpha", cfg.alphas);
    for (double a : cfg.alphas) {
        if (!(a > 0.0)) throw ConfigError(rd.line_of("tmprobe.alpha"), "tmprobe.alpha", "entries must be > 0");
    }
    if (cfg.alphas.empty()) throw ConfigError(rd.line_of("tmprobe.alpha"), "tmprobe.alpha", "must not be empty");
    rd.integer("tmprobe.samples", cfg.probe_samples, 10);

    // sweep
    rd.string("sweep.command", cfg.sweep_command);
    rd.string("sweep.parameter", cfg.sweep_parameter);
    rd.list("sweep.values", cfg.sweep_values);
    if (!cfg.sweep_parameter.empty()) {
        static const std::set<std::string> commands{"radial", "stability", "mp2d", "tmprobe"};
        if (!commands.count(cfg.sweep_command)) {
            throw ConfigError(rd.line_of("sweep.command"), "sweep.command",
                              "must be one of radial, stability, mp2d, tmprobe");
        }
        if (cfg.sweep_parameter.rfind("sweep.", 0) == 0 || cfg.sweep_parameter.find('.') == std::string::npos) {
            throw ConfigError(rd.line_of("sweep.parameter"), "sweep.parameter", "must name a section.key outside [sweep]");
        }
        if (cfg.sweep_values.empty()) throw ConfigError(rd.line_of("sweep.values"), "sweep.values", "must not be empty");
    }

    // run / output
    double seed = static_cast<double>(cfg.seed);
    rd.number("run.seed", seed, [](double s) { return s >= 0.0 && s == std::floor(s) && s < 9.007199254740992e15; },
              "a nonnegative integer below 2^53");
    cfg.seed = static_cast<std::uint64_t>(seed);
    cfg.mp.seed = cfg.seed;
    rd.string("output.directory", cfg.out_dir);

    rd.reject_unknown();
    return cfg;
}

}  // namespace annulus
