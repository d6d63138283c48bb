#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "annulus/conevar.hpp"
#include "annulus/geometry.hpp"
#include "annulus/nonlinearity.hpp"
#include "annulus/quadrature.hpp"
#include "annulus/radial.hpp"

namespace annulus {

/// Parse or validation failure. line is 1-based; 0 when the value did not come
/// from a file line (sweep overrides, cross-field checks without a location).
class ConfigError : public std::runtime_error {
public:
    ConfigError(int line, std::string key, const std::string& message);
    int line() const { return line_; }
    const std::string& key() const { return key_; }

private:
    int line_;
    std::string key_;
};

struct ConfigValue {
    std::variant<bool, double, std::string, std::vector<double>> value;
    int line = 0;
};

/// Flat TOML subset: [section] headers, key = value lines, # comments. Values
/// are numbers, "strings", true/false, or single-line numeric arrays. Keys are
/// stored fully qualified ("section.key").
class ConfigTable {
public:
    static ConfigTable parse(std::string_view text);
    static ConfigTable load(const std::filesystem::path& path);

    bool contains(const std::string& key) const { return entries_.count(key) != 0; }
    const ConfigValue* find(const std::string& key) const;
    void set(const std::string& key, ConfigValue value) { entries_[key] = std::move(value); }
    const std::map<std::string, ConfigValue>& entries() const { return entries_; }

    /// Sorted "key = value" lines; values printed with 17 significant digits.
    std::string canonical() const;

private:
    std::map<std::string, ConfigValue> entries_;
};

std::uint64_t fnv1a64(std::string_view bytes);

struct RunConfig {
    AnnulusSpec annulus{5, 2.0, 3.0, 1.0, false};
    NonlinearitySpec nonlin = NonlinearitySpec::power(4.0, 4.0);

    std::size_t nr = 128;
    std::size_t ntheta = 64;
    QuadratureRule rule = QuadratureRule::Lobatto5;

    std::size_t radial_nodes = 2001;
    RadialOptions radial{};

    std::size_t angular_nodes = 257;
    bool cross_check = true;
    std::size_t check_nr = 256;
    std::size_t check_ntheta = 128;
    std::vector<double> taus{0.02, 0.035, 0.05};
    int assumption_samples = 10000;

    MountainPassOptions mp{};

    std::vector<double> alphas{0.1, 0.2, 0.4, 0.8, 1.2, 1.6};
    int probe_samples = 64;

    std::string sweep_command;
    std::string sweep_parameter;
    std::vector<double> sweep_values;

    std::uint64_t seed = 1;
    std::string out_dir = "out";
};

/// Builds and validates a RunConfig. Unknown keys are rejected.
RunConfig build_run_config(const ConfigTable& table);

}  // namespace annulus
