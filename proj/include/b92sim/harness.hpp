#pragma once

// Sweeps, figure presets, calibration and result emission.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "b92sim/analytics.hpp"
#include "b92sim/config.hpp"

namespace b92 {

enum class SweepAxis { ClockHz, LengthKm };

const char* to_string(SweepAxis axis);

struct SweepSpec {
    std::string name = "sweep";
    SweepAxis axis = SweepAxis::ClockHz;
    std::vector<double> points;
    SimConfig fixed;
    std::vector<std::string> profiles = {"standard", "enhanced"};
    std::vector<ChannelMode> modes = {ChannelMode::FullFiber};
    int trials_per_point = 1;
    std::uint64_t base_seed = 1;
    /// When set, each point runs max(fixed.n_slots, slots for about this many
    /// sifted bits) slots, so low-rate points still get usable statistics.
    std::optional<double> target_sifted_bits;

    void validate() const;
};

/// "fig2": 1.0 .. 2.0 GHz at 6.55 km. "fig3": 0.1 .. 15 km at 2 GHz, fiber and
/// attenuator modes. Throws ConfigError for other names.
SweepSpec preset(std::string_view name, const SimConfig& base);

/// A configuration file plus a [sweep] section (name, axis, points, profiles,
/// modes, trials_per_point, base_seed, target_sifted_bits).
SweepSpec parse_sweep_spec(std::string_view text);
SweepSpec load_sweep_spec(const std::filesystem::path& path);

struct ResultRow {
    double axis_value = 0.0;
    std::string profile;
    ChannelMode mode = ChannelMode::FullFiber;
    std::optional<double> qber;
    double qber_err = 0.0;
    double sift_rate_bps = 0.0;
    double net_rate_bps = 0.0;
    double detected_rate_cps = 0.0;
    std::uint64_t seed = 0;
    std::int64_t sifted_bits = 0;
};

using ResultTable = std::vector<ResultRow>;

/// Stable per-row seed: depends on the coordinates' values, never their position.
std::uint64_t derive_seed(std::uint64_t base_seed, double axis_value, std::string_view profile,
                          ChannelMode mode, int trial);

/// Runs every (point, profile, mode, trial). Trials of a row are pooled.
/// Rows come back in point-major order regardless of scheduling; the output
/// is identical for any worker count. A failing run aborts the sweep with its
/// coordinates in the message.
ResultTable run_sweep(const SweepSpec& spec, int workers);

std::string format_csv(const ResultTable& table);

/// Writes `csv_path` and a gnuplot script next to it (same stem, .gp).
void emit_results(const ResultTable& table, const std::filesystem::path& csv_path,
                  SweepAxis axis, std::string_view title);

struct QberAnchor {
    std::string profile;
    double clock_hz = 0.0;
    double length_km = 0.0;
    double target = 0.0;
    double tolerance = 0.0;
};

struct NetRateAnchor {
    std::string profile;
    double clock_hz = 0.0;
    double length_km = 0.0;
    double target_bps = 0.0;
    double low_bps = 0.0;
    double high_bps = 0.0;
};

struct Anchors {
    std::vector<QberAnchor> qber;
    std::optional<NetRateAnchor> net_rate;

    /// 2 GHz, 6.55 km: standard 0.178, enhanced 0.066; enhanced net rate of order 20 kbit/s.
    static Anchors reference();
};

struct CalibrationOptions {
    int max_sweeps = 200;
    std::uint64_t seed = 1;
    /// Monte Carlo check at each anchor runs until about this many sifted bits.
    double mc_target_bits = 2e5;
    bool run_monte_carlo = true;
};

struct AnchorOutcome {
    std::string label;
    double target = 0.0;
    double tolerance = 0.0;
    double analytic = 0.0;
    std::optional<double> monte_carlo;
    double monte_carlo_err = 0.0;
};

struct CalibrationResult {
    SimConfig fitted;
    bool success = false;
    int iterations = 0;
    double objective = 0.0;
    std::vector<AnchorOutcome> qber;
    std::optional<AnchorOutcome> net_rate;

    std::string report() const;
};

/// Names of the parameters calibrate may move.
const std::vector<std::string>& calibration_parameters();

/// Coordinate descent over the analytic model. Free parameters: emitter base
/// pulse width and bandwidth, sync jitter, gate fraction, dark count rate and
/// the standard module's centroid alpha. Returns immediately (zero iterations)
/// when every anchor already holds.
CalibrationResult calibrate(const SimConfig& start, const Anchors& anchors,
                            const CalibrationOptions& options = {});

/// Slot count that yields about `target_bits` sifted bits, by the analytic rates.
std::int64_t slots_for_sifted_bits(const LinkConfig& config, double target_bits,
                                   std::int64_t min_slots = 2'000'000,
                                   std::int64_t max_slots = 400'000'000'000);

} // namespace b92
