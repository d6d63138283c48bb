#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "annulus/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Variational solver and checks for -Δu + λu = f(x,u) on an annulus"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    int jobs = 1;
    std::uint64_t seed = 0;
    bool verbose = false;

    for (const char* name : {"radial", "stability", "mp2d", "tmprobe", "sweep"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "Run configuration (TOML subset)")->required();
        sub->add_option("--out", out_dir, "Output directory (default: output.directory or ./out)");
        sub->add_option("--jobs", jobs, "Concurrent sweep entries")->check(CLI::PositiveNumber);
        sub->add_option("--seed", seed, "Random seed, overrides run.seed");
        sub->add_flag("--verbose", verbose, "Progress on stderr");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : annulus::kExitConfig;
    }
    const CLI::App* sub = app.get_subcommands().front();

    annulus::CommandOptions opts;
    opts.out = out_dir;
    opts.jobs = jobs;
    opts.verbose = verbose;
    if (sub->count("--seed")) opts.seed = seed;

    const annulus::CommandResult r = annulus::run_command_file(sub->get_name(), config_path, opts);
    if (r.exit_code != annulus::kExitOk) {
        std::fprintf(stderr, "%s failed (%s): %s\n", sub->get_name().c_str(), r.error_kind.c_str(), r.message.c_str());
    } else if (verbose) {
        std::fprintf(stderr, "wrote %s\n", r.out_dir.string().c_str());
    }
    return r.exit_code;
}
