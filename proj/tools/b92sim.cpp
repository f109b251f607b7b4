// b92sim command line: single runs, figure sweeps and calibration.

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "b92sim/errors.hpp"
#include "b92sim/harness.hpp"

namespace fs = std::filesystem;
using namespace b92;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct CommonOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::string out_dir;
};

SimConfig resolve_config(const CommonOptions& o) {
    SimConfig c = o.config_path.empty() ? SimConfig{} : load_config(o.config_path);
    if (o.seed) c.seed = *o.seed;
    if (o.workers) c.workers = *o.workers;
    c.validate();
    return c;
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

void echo_config(const SimConfig& c) {
    std::cout << "# resolved configuration\n" << to_toml(c) << "\n";
}

std::string summary_text(const RunSummary& s, const LinkConfig& link) {
    std::ostringstream o;
    const auto pred = predict(link);
    o << "profile            " << s.profile_name << '\n'
      << "channel_mode       " << to_string(s.channel_mode) << '\n'
      << "clock_hz           " << format_number(s.clock_hz) << '\n'
      << "length_km          " << format_number(s.length_km) << '\n'
      << "slots              " << s.slots_simulated << '\n'
      << "detected_rate_cps  " << format_number(s.detected_rate_total_cps) << " (" << format_number(s.detected_rate_cps[0])
      << " + " << format_number(s.detected_rate_cps[1]) << ")\n"
      << "sift_rate_bps      " << format_number(s.sift_rate_bps) << '\n'
      << "sifted_bits        " << s.sifted_bits << '\n'
      << "sifted_errors      " << s.sifted_errors << '\n'
      << "qber               " << (s.qber ? format_number(*s.qber) : std::string("n/a")) << " +/- "
      << format_number(s.statistical_error_qber) << '\n'
      << "qber_analytic      " << (pred.qber ? format_number(*pred.qber) : std::string("n/a")) << '\n'
      << "net_rate_bps       " << format_number(s.net_rate_bps) << '\n'
      << "double_click_slots " << s.double_click_slots << '\n'
      << "gate_rejected      " << s.gate_rejected << '\n';
    return o.str();
}

// Reconciles and compresses the sifted key; returns Alice's and Bob's final keys.
std::pair<BitString, BitString> distil(const LinkResult& r, const LinkConfig& link, std::uint64_t seed,
                                       std::ostream& log) {
    const auto& key = r.sifted;
    if (key.size() == 0 || !r.summary.qber) throw std::runtime_error("no sifted bits to distil");
    const double q = std::max(*r.summary.qber, 1e-3);
    Rng rng(hash_combine(seed, 0xca5cadeULL));
    const auto rec = reconcile(key.alice_bits, key.bob_bits, q, rng);
    const auto m = final_key_length(key.size(), *r.summary.qber, rec.report.parity_bits_leaked, link.security);
    log << "reconciliation: " << rec.report.passes << " passes, " << rec.report.parity_bits_leaked
        << " parity bits leaked, " << rec.report.corrections << " corrections, " << rec.report.residual_errors
        << " residual errors\n"
        << "final key: " << m << " bits\n";
    if (m == 0) return {};
    const std::uint64_t pa_seed = hash_combine(seed, 0x70e1172ULL);
    return {privacy_amplify(key.alice_bits, pa_seed, m), privacy_amplify(rec.bob_key, pa_seed, m)};
}

int cmd_run(const CommonOptions& common, const std::string& profile, const std::string& mode,
            std::optional<std::int64_t> slots, std::optional<double> clock_hz, std::optional<double> length_km,
            bool export_keys) {
    SimConfig c = resolve_config(common);
    if (!profile.empty()) c.profile = profile;
    if (!mode.empty()) c.channel.mode = parse_channel_mode(mode.c_str());
    if (slots) c.n_slots = *slots;
    if (clock_hz) c.source.clock_hz = *clock_hz;
    if (length_km) c.channel.length_km = *length_km;
    c.validate();
    echo_config(c);

    const LinkConfig link = c.link();
    Rng rng(c.seed);
    const auto t0 = std::chrono::steady_clock::now();
    const auto result = run_link(link, c.n_slots, rng);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::string text = summary_text(result.summary, link);
    std::cout << "# run summary\n" << text << "elapsed_s          " << format_number(secs) << '\n';

    std::ostringstream keylog;
    std::pair<BitString, BitString> keys;
    if (export_keys) {
        keys = distil(result, link, c.seed, keylog);
        std::cout << keylog.str();
    }
    if (!common.out_dir.empty()) {
        const fs::path out(common.out_dir);
        write_file(out / "summary.txt", text + keylog.str());
        write_file(out / "config.toml", to_toml(c));
        if (export_keys) {
            write_file(out / "alice_key.hex", to_hex(keys.first) + "\n");
            write_file(out / "bob_key.hex", to_hex(keys.second) + "\n");
        }
        std::cout << "wrote " << out.string() << '\n';
    } else if (export_keys) {
        std::cout << "alice_key " << to_hex(keys.first) << "\nbob_key   " << to_hex(keys.second) << '\n';
    }
    return kExitOk;
}

int cmd_sweep(const CommonOptions& common, const std::string& preset_name, const std::string& spec_path,
              std::optional<int> trials) {
    SweepSpec spec;
    if (!spec_path.empty()) {
        spec = load_sweep_spec(spec_path);
        if (common.seed) spec.base_seed = *common.seed;
        if (common.workers) spec.fixed.workers = *common.workers;
    } else {
        spec = preset(preset_name, resolve_config(common));
    }
    if (trials) spec.trials_per_point = *trials;
    spec.validate();
    echo_config(spec.fixed);

    const auto t0 = std::chrono::steady_clock::now();
    const auto table = run_sweep(spec, spec.fixed.workers);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const fs::path out = common.out_dir.empty() ? fs::path(".") : fs::path(common.out_dir);
    const fs::path csv = out / (spec.name + ".csv");
    emit_results(table, csv, spec.axis, spec.name);
    std::cout << format_csv(table) << "# " << table.size() << " rows in " << format_number(secs) << " s; wrote "
              << csv.string() << " and " << fs::path(csv).replace_extension(".gp").string() << '\n';
    return kExitOk;
}

int cmd_calibrate(const CommonOptions& common, bool skip_mc, double mc_bits) {
    SimConfig c = resolve_config(common);
    echo_config(c);
    CalibrationOptions opts;
    opts.seed = c.seed;
    opts.run_monte_carlo = !skip_mc;
    opts.mc_target_bits = mc_bits;
    const auto result = calibrate(c, Anchors::reference(), opts);
    std::cout << result.report();
    const fs::path out = common.out_dir.empty() ? fs::path(".") : fs::path(common.out_dir);
    const fs::path path = out / (result.success ? "calibrated.toml" : "calibration_failed.toml");
    write_file(path, to_toml(result.fitted));
    write_file(out / "calibration_report.txt", result.report());
    std::cout << "wrote " << path.string() << '\n';
    return result.success ? kExitOk : kExitRuntime;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"b92sim: gigahertz-clocked B92 quantum key distribution link simulator"};
    app.require_subcommand(1);

    CommonOptions common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config_path, "TOML-style configuration file")->check(CLI::ExistingFile);
        sub->add_option("--seed", common.seed, "Base seed (u64)");
        sub->add_option("--workers", common.workers, "Worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--out", common.out_dir, "Output directory");
    };

    auto* run = app.add_subcommand("run", "Simulate a single operating point");
    add_common(run);
    std::string profile, mode;
    std::optional<std::int64_t> slots;
    std::optional<double> clock_hz, length_km;
    bool export_keys = false;
    run->add_option("--profile", profile, "Detector profile (standard, enhanced or a configured name)");
    run->add_option("--mode", mode, "Channel mode")->check(CLI::IsMember({"fiber", "attenuator"}));
    run->add_option("--slots", slots, "Clock slots to simulate")->check(CLI::PositiveNumber);
    run->add_option("--clock-hz", clock_hz, "Override source clock (Hz)");
    run->add_option("--length-km", length_km, "Override fibre length (km)");
    run->add_flag("--keys", export_keys, "Reconcile, privacy-amplify and export the final keys as hex");

    auto* sweep = app.add_subcommand("sweep", "Run a figure preset or a sweep specification");
    add_common(sweep);
    std::string preset_name, spec_path;
    std::optional<int> trials;
    auto* p = sweep->add_option("--preset", preset_name, "Figure preset")->check(CLI::IsMember({"fig2", "fig3"}));
    auto* s = sweep->add_option("--spec", spec_path, "Sweep specification file")->check(CLI::ExistingFile);
    p->excludes(s);
    sweep->add_option("--trials", trials, "Trials per point")->check(CLI::PositiveNumber);

    auto* cal = app.add_subcommand("calibrate", "Fit unpublished parameters to the QBER and net-rate anchors");
    add_common(cal);
    bool skip_mc = false;
    double mc_bits = 2e5;
    cal->add_flag("--no-monte-carlo", skip_mc, "Skip the Monte Carlo check at the anchors");
    cal->add_option("--mc-bits", mc_bits, "Sifted bits per Monte Carlo anchor check")->check(CLI::PositiveNumber);

    auto* version = app.add_subcommand("version", "Print the version");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (version->parsed()) {
            std::cout << "b92sim " << B92SIM_VERSION << '\n';
            return kExitOk;
        }
        if (run->parsed()) return cmd_run(common, profile, mode, slots, clock_hz, length_km, export_keys);
        if (sweep->parsed()) {
            if (preset_name.empty() && spec_path.empty()) throw UsageError("sweep needs --preset or --spec");
            return cmd_sweep(common, preset_name, spec_path, trials);
        }
        if (cal->parsed()) return cmd_calibrate(common, skip_mc, mc_bits);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}
