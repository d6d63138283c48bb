#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "annulus/commands.hpp"
#include "annulus/config.hpp"

using namespace annulus;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* kBench = R"(# breaking benchmark
[annulus]
N = 5
R0 = 2.0
R1 = 3.0
lambda = 1.0

[nonlinearity]
family = "power"   # f = u^3
p = 4

[grid]
nr = 64
ntheta = 32
)";

fs::path scratch(const std::string& name) {
    const fs::path p = fs::path(ANNULUS_TEST_TMP) / name;
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

CommandResult run(const std::string& cmd, const std::string& text, const fs::path& out, int jobs = 1) {
    CommandOptions o;
    o.out = out;
    o.jobs = jobs;
    return run_command(cmd, ConfigTable::parse(text), o);
}

int error_line(const std::string& text) {
    try {
        build_run_config(ConfigTable::parse(text));
    } catch (const ConfigError& e) {
        return e.line();
    }
    return -1;
}

}  // namespace

TEST_CASE("fnv1a64") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("config parsing") {
    const ConfigTable t = ConfigTable::parse(kBench);
    REQUIRE(t.find("annulus.N"));
    CHECK(std::get<double>(t.find("annulus.N")->value) == 5.0);
    CHECK(t.find("annulus.N")->line == 3);
    CHECK(std::get<std::string>(t.find("nonlinearity.family")->value) == "power");
    CHECK_FALSE(t.contains("N"));

    const ConfigTable a = ConfigTable::parse("[stability]\ntau = [0.01, 0.02]\ncross_check = false\n");
    CHECK(std::get<std::vector<double>>(a.find("stability.tau")->value) == std::vector<double>{0.01, 0.02});
    CHECK(std::get<bool>(a.find("stability.cross_check")->value) == false);

    // comments, key order and spacing do not change the canonical form
    const ConfigTable b = ConfigTable::parse(
        "[grid]\nntheta=32\nnr =   64\n[nonlinearity]\np = 4.0\nfamily = \"power\"\n"
        "[annulus]\nlambda = 1\nR1 = 3\nR0 = 2\nN = 5\n");
    CHECK(b.canonical() == t.canonical());
    CHECK(fnv1a64(b.canonical()) == fnv1a64(t.canonical()));

    const RunConfig cfg = build_run_config(t);
    CHECK(cfg.annulus.N == 5);
    CHECK(cfg.nr == 64);
    CHECK(std::get<Power>(cfg.nonlin.family).pfrak == 4.0);
}

TEST_CASE("config errors carry line numbers") {
    CHECK_THROWS_AS(ConfigTable::parse("[annulus\nN = 5\n"), ConfigError);
    try {
        ConfigTable::parse("[annulus]\nN = 5\nR0 = \n");
        FAIL("expected a parse error");
    } catch (const ConfigError& e) {
        CHECK(e.line() == 3);
    }
    try {
        ConfigTable::parse("[annulus]\nN = 5\nN = 6\n");
        FAIL("expected a duplicate key error");
    } catch (const ConfigError& e) {
        CHECK(e.line() == 3);
        CHECK(e.key() == "annulus.N");
    }
    CHECK_THROWS_AS(ConfigTable::parse("[a]\nx = \"open\n"), ConfigError);
    CHECK_THROWS_AS(ConfigTable::parse("[a]\nx = [1, two]\n"), ConfigError);

    CHECK(error_line("[annulus]\nN = 5\nR0 = 3\nR1 = 2\n") > 0);
    CHECK(error_line("[annulus]\nN = 5\nspeed = 3\n") == 3);
    CHECK(error_line("[annulus]\nN = 2\n") == 2);
    CHECK(error_line("[annulus]\nN = 5.5\n") == 2);
    CHECK(error_line("[nonlinearity]\nfamily = \"cubic\"\n") == 2);
    CHECK(error_line("[nonlinearity]\np = 1.5\n") == 2);
    CHECK(error_line("[grid]\nnr = 3\n") == 2);
    CHECK(error_line("[annulus]\nN = \"five\"\n") == 2);
}

TEST_CASE("radial run writes deterministic outputs") {
    const fs::path d1 = scratch("radial_1"), d2 = scratch("radial_2");
    const CommandResult r1 = run("radial", kBench, d1);
    const CommandResult r2 = run("radial", kBench, d2);
    REQUIRE(r1.exit_code == 0);
    REQUIRE(r2.exit_code == 0);
    for (const char* f : {"profile.csv", "radial.json", "manifest.json"}) {
        REQUIRE(fs::exists(d1 / f));
        CHECK(slurp(d1 / f) == slurp(d2 / f));
    }
    const json m = read_json(d1 / "manifest.json");
    CHECK(m["command"] == "radial");
    CHECK(m["exit_code"] == 0);
    CHECK(m["config"] == ConfigTable::parse(kBench).canonical());
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(ConfigTable::parse(kBench).canonical())));
    CHECK(m["config_hash"] == std::string("fnv1a64:") + hash);
    CHECK(m["versions"].contains("eigen"));
    CHECK(m["files"].size() == 2);

    // every number round-trips and carries 17 significant digits unless shorter is exact
    std::istringstream csv(slurp(d1 / "profile.csv"));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "r,u,du");
    int long_fields = 0, rows = 0;
    while (std::getline(csv, line)) {
        ++rows;
        std::istringstream ls(line);
        std::string tok;
        while (std::getline(ls, tok, ',')) {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", std::stod(tok));
            CHECK(tok == buf);
            if (tok.find_first_of("123456789") != std::string::npos &&
                std::count_if(tok.begin(), tok.end(), ::isdigit) >= 16)
                ++long_fields;
        }
    }
    CHECK(rows == 2001);
    CHECK(long_fields > rows);
}

TEST_CASE("exit codes") {
    SUBCASE("config error") {
        const fs::path d = scratch("bad_annulus");
        const CommandResult r = run("radial", "[annulus]\nN = 5\nR0 = 3\nR1 = 2\n", d);
        CHECK(r.exit_code == kExitConfig);
        const json e = read_json(d / "error.json");
        CHECK(e["exit_code"] == 2);
        CHECK(e["line"].get<int>() > 0);
        CHECK(fs::exists(d / "manifest.json"));
    }
    SUBCASE("unknown command") {
        CHECK(run("solve", kBench, scratch("unknown")).exit_code == kExitConfig);
    }
    SUBCASE("parse error through the file loader") {
        const fs::path d = scratch("syntax");
        fs::create_directories(d);
        std::ofstream(d / "c.toml") << "[annulus]\nN = 5\n\n\n\nR0 = = 2\n";
        CommandOptions o;
        o.out = d / "out";
        const CommandResult r = run_command_file("radial", d / "c.toml", o);
        CHECK(r.exit_code == kExitConfig);
        CHECK(read_json(d / "out" / "error.json")["line"] == 6);
        CHECK(run_command_file("radial", d / "missing.toml", o).exit_code == kExitConfig);
    }
    SUBCASE("solver error") {
        const fs::path d = scratch("no_bracket");
        const CommandResult r = run("radial", "[nonlinearity]\nfamily = \"linear\"\nslope = 0\n", d);
        CHECK(r.exit_code == kExitSolver);
        CHECK(r.error_kind == "NoBracket");
        CHECK(read_json(d / "error.json")["kind"] == "NoBracket");
    }
    SUBCASE("iteration cap") {
        const fs::path d = scratch("mp_cap");
        const CommandResult r = run("mp2d", std::string(kBench) + "[mountain_pass]\nmax_iterations = 1\n", d);
        CHECK(r.exit_code == kExitSolver);
        CHECK(fs::exists(d / "candidate.csv"));
        CHECK(fs::exists(d / "error.json"));
    }
}

TEST_CASE("stability and mp2d") {
    const fs::path d = scratch("stability");
    const CommandResult r = run("stability", std::string(kBench) + "[stability]\ncheck_nr = 64\ncheck_ntheta = 32\n", d);
    REQUIRE(r.exit_code == 0);
    const json s = read_json(d / "stability.json");
    CHECK(s["verdict"] == "Breaking");
    CHECK(s["D"].get<double>() < 0.0);
    CHECK(fs::exists(d / "path_test.csv"));

    const fs::path m = scratch("mp2d");
    const CommandResult mp = run("mp2d", kBench, m);
    REQUIRE(mp.exit_code == 0);
    const json j = read_json(m / "mountain_pass.json");
    CHECK(j["converged"] == true);
    CHECK(j["is_radial"] == false);
    CHECK(j["energy"].get<double>() < j["radial_energy"].get<double>());
    for (const char* f : {"candidate.csv", "path_log.csv", "path.csv"}) CHECK(fs::exists(m / f));
}

TEST_CASE("tmprobe and seeds") {
    const std::string cfg = std::string(kBench) + "[tmprobe]\nalpha = [0.1, 0.4, 1.6]\nsamples = 12\n";
    const fs::path a = scratch("tm_a"), b = scratch("tm_b"), c = scratch("tm_c");
    REQUIRE(run("tmprobe", cfg, a).exit_code == 0);
    CommandOptions o;
    o.out = b;
    o.seed = 1;
    REQUIRE(run_command("tmprobe", ConfigTable::parse(cfg), o).exit_code == 0);
    CHECK(slurp(a / "tmprobe.csv") == slurp(b / "tmprobe.csv"));
    o.out = c;
    o.seed = 77;
    REQUIRE(run_command("tmprobe", ConfigTable::parse(cfg), o).exit_code == 0);
    CHECK(slurp(a / "tmprobe.csv") != slurp(c / "tmprobe.csv"));
    CHECK(read_json(c / "manifest.json")["seed"] == 77);

    const json t = read_json(a / "tmprobe.json");
    (void)t;
    std::istringstream csv(slurp(a / "tmprobe.csv"));
    std::string line;
    std::getline(csv, line);
    double prev = 0.0;
    int rows = 0;
    while (std::getline(csv, line)) {
        const double mx = std::stod(line.substr(line.find(',') + 1));
        CHECK(mx > prev);
        prev = mx;
        ++rows;
    }
    CHECK(rows == 3);
}

TEST_CASE("sweep isolates entries") {
    const std::string cfg = std::string(kBench) +
                            "[stability]\ntau = []\ncross_check = false\n"
                            "[sweep]\ncommand = \"stability\"\nparameter = \"nonlinearity.p\"\nvalues = [3.0, 1.5, 4.0]\n";
    const fs::path d1 = scratch("sweep_1"), d2 = scratch("sweep_4");
    const CommandResult r1 = run("sweep", cfg, d1, 1);
    const CommandResult r4 = run("sweep", cfg, d2, 4);
    CHECK(r1.exit_code == kExitConfig);
    CHECK(r4.exit_code == kExitConfig);
    CHECK(slurp(d1 / "index.csv") == slurp(d2 / "index.csv"));
    CHECK(read_json(d1 / "entry_000" / "stability.json")["verdict"] == "Breaking");
    CHECK(fs::exists(d1 / "entry_001" / "error.json"));
    CHECK(read_json(d1 / "entry_002" / "stability.json")["verdict"] == "Breaking");
    CHECK(read_json(d1 / "entry_002" / "manifest.json")["config"].get<std::string>().find("nonlinearity.p = 4") !=
          std::string::npos);

    std::istringstream idx(slurp(d1 / "index.csv"));
    std::string line;
    int rows = -1;
    while (std::getline(idx, line)) ++rows;
    CHECK(rows == 3);

    CHECK(run("sweep", std::string(kBench) + "[sweep]\ncommand = \"sweep\"\nparameter = \"nonlinearity.p\"\nvalues = [3]\n",
              scratch("sweep_nested"))
              .exit_code == kExitConfig);
}
