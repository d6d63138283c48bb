#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "annulus/config.hpp"

namespace annulus {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSolver = 3;
inline constexpr int kExitInvariant = 4;

struct CommandOptions {
    std::filesystem::path out;               // empty: output.directory from the config
    int jobs = 1;                            // sweep concurrency
    std::optional<std::uint64_t> seed;       // overrides run.seed
    bool verbose = false;
};

/// Scalar results of one run, in report order; used for the sweep index.
using Summary = std::vector<std::pair<std::string, std::string>>;

struct CommandResult {
    int exit_code = kExitOk;
    std::string error_kind;  // empty on success
    std::string message;
    Summary summary;
    std::filesystem::path out_dir;
};

/// Runs one of radial | stability | mp2d | tmprobe | sweep. Never throws for
/// run failures: they are mapped to an exit code and written to error.json.
/// A manifest.json is written for every run whose output directory exists.
CommandResult run_command(const std::string& command, const ConfigTable& config, const CommandOptions& opts);

/// Loads the config file first; parse errors are reported like any config error.
CommandResult run_command_file(const std::string& command, const std::filesystem::path& config_path,
                               const CommandOptions& opts);

/// Version strings recorded in manifests.
std::vector<std::pair<std::string, std::string>> version_info();

}  // namespace annulus
