#pragma once

// TOML-style configuration: `[section]` headers, `key = value` lines, numbers,
// quoted strings, booleans and single-line arrays. Keys are addressed as
// `section.key`; a bare top-level key resolves to the unique fixed-section key
// with the same name (so `clock_hz = 2e9` means `source.clock_hz`).

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "b92sim/protocol.hpp"

namespace b92 {

struct ConfigValue {
    std::variant<double, std::string, bool, std::vector<double>, std::vector<std::string>> value;
    std::string raw;   // source text, for exact integer parsing
    int line = 0;
};

/// Flat, ordered key -> value view of a configuration file.
using ConfigTable = std::map<std::string, ConfigValue>;

ConfigTable parse_table(std::string_view text);

struct ProfileTiming {
    std::vector<JitterPoint> jitter_table;
    double centroid_alpha = 0.0;
    double tail_fraction = 0.0;
    double tail_tau_ps = 0.0;
};

struct SimConfig {
    std::string name = "default";
    SourceSpec source;
    ChannelSpec channel;

    std::string profile = "enhanced";
    double efficiency = 0.45;
    double dark_cps = 250.0;
    double dead_time_ns = 50.0;
    std::map<std::string, ProfileTiming> profiles = builtin_profiles();

    GateSpec gate;
    double sync_fwhm_ps = 100.0;
    SecurityParams security;

    std::int64_t n_slots = 2'000'000;
    std::uint64_t seed = 1;
    int workers = 1;

    /// Full detector profile: shared module parameters plus the named timing.
    DetectorProfile detector(const std::string& profile_name) const;
    LinkConfig link(const std::string& profile_name) const;
    LinkConfig link() const { return link(profile); }

    void validate() const;

    static std::map<std::string, ProfileTiming> builtin_profiles();
};

/// Consumes every configuration key it recognises from `table`.
SimConfig config_from_table(ConfigTable& table);

/// Throws ConfigError for the first key left in `table`.
void reject_unknown_keys(const ConfigTable& table);

SimConfig parse_config(std::string_view text);
SimConfig load_config(const std::filesystem::path& path);

/// The fully resolved configuration, defaults included, in the input syntax.
std::string to_toml(const SimConfig& config);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_number(double v);

std::string read_text_file(const std::filesystem::path& path);

} // namespace b92
