#include "b92sim/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "b92sim/errors.hpp"

namespace b92 {

const char* to_string(SweepAxis axis) { return axis == SweepAxis::ClockHz ? "clock_hz" : "length_km"; }

void SweepSpec::validate() const {
    if (points.empty()) throw ConfigError("sweep.points must be non-empty");
    for (std::size_t i = 1; i < points.size(); ++i)
        if (!(points[i] > points[i - 1])) throw ConfigError("sweep.points must be strictly increasing");
    if (trials_per_point < 1) throw ConfigError("sweep.trials_per_point must be >= 1");
    if (profiles.empty()) throw ConfigError("sweep.profiles must be non-empty");
    if (target_sifted_bits && !(*target_sifted_bits > 0.0)) throw ConfigError("sweep.target_sifted_bits must be > 0");
    if (modes.empty()) throw ConfigError("sweep.modes must be non-empty");
    fixed.validate();
    for (const auto& p : profiles) fixed.detector(p);
}

SweepSpec preset(std::string_view name, const SimConfig& base) {
    SweepSpec s;
    s.name = std::string(name);
    s.fixed = base;
    s.base_seed = base.seed;
    if (name == "fig2") {
        s.axis = SweepAxis::ClockHz;
        s.points = {1.0e9, 1.2e9, 1.4e9, 1.6e9, 1.8e9, 2.0e9};
        s.fixed.channel.length_km = 6.55;
        s.modes = {ChannelMode::FullFiber};
    } else if (name == "fig3") {
        s.axis = SweepAxis::LengthKm;
        s.points = {0.1, 2.0, 4.2, 6.55, 10.0, 15.0};
        s.fixed.source.clock_hz = 2e9;
        s.modes = {ChannelMode::FullFiber, ChannelMode::AttenuatorOnly};
    } else {
        throw ConfigError("unknown preset \"" + std::string(name) + "\" (expected fig2 or fig3)");
    }
    return s;
}

SweepSpec parse_sweep_spec(std::string_view text) {
    auto table = parse_table(text);
    SweepSpec s;
    auto take = [&](const std::string& key) -> std::optional<ConfigValue> {
        auto it = table.find(key);
        if (it == table.end()) return std::nullopt;
        auto v = std::move(it->second);
        table.erase(it);
        return v;
    };
    if (auto v = take("sweep.name")) {
        if (!std::holds_alternative<std::string>(v->value)) throw ConfigError("sweep.name: expected a string");
        s.name = std::get<std::string>(v->value);
    }
    if (auto v = take("sweep.axis")) {
        const auto* a = std::get_if<std::string>(&v->value);
        if (!a) throw ConfigError("sweep.axis: expected a string");
        if (*a == "clock_hz")
            s.axis = SweepAxis::ClockHz;
        else if (*a == "length_km")
            s.axis = SweepAxis::LengthKm;
        else
            throw ConfigError("sweep.axis must be \"clock_hz\" or \"length_km\"");
    }
    if (auto v = take("sweep.points")) {
        const auto* p = std::get_if<std::vector<double>>(&v->value);
        if (!p) throw ConfigError("sweep.points: expected an array of numbers");
        s.points = *p;
    }
    if (auto v = take("sweep.profiles")) {
        const auto* p = std::get_if<std::vector<std::string>>(&v->value);
        if (!p) throw ConfigError("sweep.profiles: expected an array of strings");
        s.profiles = *p;
    }
    if (auto v = take("sweep.modes")) {
        const auto* p = std::get_if<std::vector<std::string>>(&v->value);
        if (!p) throw ConfigError("sweep.modes: expected an array of strings");
        s.modes.clear();
        for (const auto& m : *p) s.modes.push_back(parse_channel_mode(m.c_str()));
    }
    if (auto v = take("sweep.trials_per_point")) {
        const auto* d = std::get_if<double>(&v->value);
        if (!d || *d != std::floor(*d)) throw ConfigError("sweep.trials_per_point: expected an integer");
        s.trials_per_point = static_cast<int>(*d);
    }
    if (auto v = take("sweep.target_sifted_bits")) {
        const auto* d = std::get_if<double>(&v->value);
        if (!d) throw ConfigError("sweep.target_sifted_bits: expected a number");
        s.target_sifted_bits = *d;
    }
    std::optional<ConfigValue> base_seed = take("sweep.base_seed");
    s.fixed = config_from_table(table);
    reject_unknown_keys(table);
    s.base_seed = s.fixed.seed;
    if (base_seed) {
        ConfigTable t;
        t.emplace("run.seed", *base_seed);
        s.base_seed = config_from_table(t).seed;
    }
    s.validate();
    return s;
}

SweepSpec load_sweep_spec(const std::filesystem::path& path) { return parse_sweep_spec(read_text_file(path)); }

std::uint64_t derive_seed(std::uint64_t base_seed, double axis_value, std::string_view profile,
                          ChannelMode mode, int trial) {
    std::uint64_t h = mix64(base_seed);
    h = hash_combine(h, hash_double(axis_value));
    h = hash_combine(h, hash_string(profile));
    h = hash_combine(h, static_cast<std::uint64_t>(mode == ChannelMode::FullFiber ? 1 : 2));
    return hash_combine(h, static_cast<std::uint64_t>(trial));
}

namespace {

struct Job {
    std::size_t row;
    int trial;
};

void for_each_parallel(std::size_t count, int workers, const std::function<void(std::size_t)>& fn) {
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const int n = std::max(1, std::min<int>(workers, static_cast<int>(count)));
    std::vector<std::thread> threads;
    for (int t = 1; t < n; ++t) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace

ResultTable run_sweep(const SweepSpec& spec, int workers) {
    spec.validate();
    ResultTable rows;
    std::vector<LinkConfig> configs;
    std::vector<std::int64_t> slots;
    for (double point : spec.points) {
        for (const auto& profile : spec.profiles) {
            for (auto mode : spec.modes) {
                LinkConfig c = spec.fixed.link(profile);
                if (spec.axis == SweepAxis::ClockHz)
                    c.source.clock_hz = point;
                else
                    c.channel.length_km = point;
                c.channel.mode = mode;
                ResultRow row;
                row.axis_value = point;
                row.profile = profile;
                row.mode = mode;
                row.seed = derive_seed(spec.base_seed, point, profile, mode, 0);
                rows.push_back(row);
                slots.push_back(spec.target_sifted_bits
                                    ? slots_for_sifted_bits(c, *spec.target_sifted_bits, spec.fixed.n_slots)
                                    : spec.fixed.n_slots);
                configs.push_back(c);
            }
        }
    }

    std::vector<Job> jobs;
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (int t = 0; t < spec.trials_per_point; ++t) jobs.push_back({r, t});
    std::vector<RunSummary> results(jobs.size());

    for_each_parallel(jobs.size(), workers, [&](std::size_t i) {
        const auto& job = jobs[i];
        const auto& row = rows[job.row];
        try {
            Rng rng(derive_seed(spec.base_seed, row.axis_value, row.profile, row.mode, job.trial));
            results[i] = run_link(configs[job.row], slots[job.row], rng).summary;
        } catch (const std::exception& e) {
            std::ostringstream msg;
            msg << "sweep run failed at " << to_string(spec.axis) << "=" << format_number(row.axis_value)
                << " profile=" << row.profile << " mode=" << to_string(row.mode) << " trial=" << job.trial
                << ": " << e.what();
            throw std::runtime_error(msg.str());
        }
    });

    for (std::size_t r = 0; r < rows.size(); ++r) {
        std::int64_t bits = 0, errors = 0;
        double sift = 0.0, detected = 0.0;
        for (int t = 0; t < spec.trials_per_point; ++t) {
            const auto& s = results[r * static_cast<std::size_t>(spec.trials_per_point) + static_cast<std::size_t>(t)];
            bits += s.sifted_bits;
            errors += s.sifted_errors;
            sift += s.sift_rate_bps;
            detected += s.detected_rate_total_cps;
        }
        auto& row = rows[r];
        row.sift_rate_bps = sift / spec.trials_per_point;
        row.detected_rate_cps = detected / spec.trials_per_point;
        row.sifted_bits = bits;
        if (bits > 0) {
            const double q = static_cast<double>(errors) / static_cast<double>(bits);
            row.qber = q;
            row.qber_err = std::sqrt(q * (1.0 - q) / static_cast<double>(bits));
            row.net_rate_bps = net_rate(row.sift_rate_bps, q, spec.fixed.security);
        }
    }
    return rows;
}

std::string format_csv(const ResultTable& table) {
    std::ostringstream o;
    o << "axis_value,profile,channel_mode,qber,qber_err,sift_rate_bps,net_rate_bps,detected_rate_cps,seed\n";
    for (const auto& r : table) {
        o << format_number(r.axis_value) << ',' << r.profile << ',' << to_string(r.mode) << ','
          << (r.qber ? format_number(*r.qber) : std::string("nan")) << ',' << format_number(r.qber_err) << ','
          << format_number(r.sift_rate_bps) << ',' << format_number(r.net_rate_bps) << ','
          << format_number(r.detected_rate_cps) << ',' << r.seed << '\n';
    }
    return o.str();
}

void emit_results(const ResultTable& table, const std::filesystem::path& csv_path, SweepAxis axis,
                  std::string_view title) {
    if (table.empty()) throw UsageError("emit_results: empty table");
    if (csv_path.has_parent_path()) std::filesystem::create_directories(csv_path.parent_path());
    {
        std::ofstream out(csv_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + csv_path.string());
        out << format_csv(table);
        if (!out) throw std::runtime_error("write failed: " + csv_path.string());
    }

    std::vector<std::pair<std::string, ChannelMode>> series;
    for (const auto& r : table)
        if (std::find(series.begin(), series.end(), std::pair{r.profile, r.mode}) == series.end())
            series.emplace_back(r.profile, r.mode);

    auto gp_path = csv_path;
    gp_path.replace_extension(".gp");
    std::ofstream gp(gp_path, std::ios::binary);
    if (!gp) throw std::runtime_error("cannot write " + gp_path.string());
    const bool clock = axis == SweepAxis::ClockHz;
    gp << "# gnuplot -p " << gp_path.filename().string() << "\n"
       << "set datafile separator \",\"\n"
       << "set key autotitle columnhead\n"
       << "set title \"" << title << "\"\n"
       << "set xlabel \"" << (clock ? "clock frequency (GHz)" : "fibre length (km)") << "\"\n"
       << "set ylabel \"QBER (%)\"\n"
       << "set grid\n"
       << "plot \\\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& [profile, mode] = series[i];
        gp << "  \"" << csv_path.filename().string() << "\" every ::1 using "
           << (clock ? "($1/1e9)" : "1") << ":((strcol(2) eq \"" << profile << "\" && strcol(3) eq \""
           << to_string(mode) << "\") ? 100*$4 : 1/0):(100*$5) with yerrorlines title \"" << profile << " ("
           << to_string(mode) << ")\"" << (i + 1 < series.size() ? ", \\\n" : "\n");
    }
}

Anchors Anchors::reference() {
    Anchors a;
    a.qber.push_back({"standard", 2e9, 6.55, 0.178, 0.025});
    a.qber.push_back({"enhanced", 2e9, 6.55, 0.066, 0.015});
    a.net_rate = NetRateAnchor{"enhanced", 2e9, 6.55, 20e3, 10e3, 40e3};
    return a;
}

namespace {

struct FreeParameter {
    std::string name;
    double lo, hi;
    std::function<double(const SimConfig&)> get;
    std::function<void(SimConfig&, double)> set;
};

std::vector<FreeParameter> free_parameters(const SimConfig& start) {
    const double min_slot_ps = start.source.slot_ps();
    return {
        {"base_pulse_fwhm_ps", 1.0, std::min(400.0, 0.8 * min_slot_ps),
         [](const SimConfig& c) { return c.source.base_pulse_fwhm_ps; },
         [](SimConfig& c, double v) { c.source.base_pulse_fwhm_ps = v; }},
        // Searched in log10 space.
        {"emitter_bandwidth_hz", 9.0, 11.0,
         [](const SimConfig& c) { return std::log10(c.source.emitter_bandwidth_hz); },
         [](SimConfig& c, double v) { c.source.emitter_bandwidth_hz = std::pow(10.0, v); }},
        {"sync_fwhm_ps", 0.0, 400.0, [](const SimConfig& c) { return c.sync_fwhm_ps; },
         [](SimConfig& c, double v) { c.sync_fwhm_ps = v; }},
        {"gate_fraction", 0.05, 1.0, [](const SimConfig& c) { return c.gate.gate_fraction; },
         [](SimConfig& c, double v) { c.gate.gate_fraction = v; }},
        {"dark_cps", 0.0, 2e4, [](const SimConfig& c) { return c.dark_cps; },
         [](SimConfig& c, double v) { c.dark_cps = v; }},
        {"centroid_alpha", 0.0, 2.0,
         [](const SimConfig& c) {
             const auto it = c.profiles.find("standard");
             return it == c.profiles.end() ? 0.0 : it->second.centroid_alpha;
         },
         [](SimConfig& c, double v) { c.profiles["standard"].centroid_alpha = v; }},
    };
}

LinkConfig at(const SimConfig& c, const std::string& profile, double clock_hz, double length_km) {
    LinkConfig l = c.link(profile);
    l.source.clock_hz = clock_hz;
    l.channel.length_km = length_km;
    l.channel.mode = ChannelMode::FullFiber;
    return l;
}

struct Evaluation {
    double objective = 0.0;
    double margin = 0.0;   // smallest normalized distance to a tolerance edge
    bool satisfied = true;
};

bool feasible(const SimConfig& c) {
    try {
        c.validate();
        return true;
    } catch (const ConfigError&) {
        return false;
    }
}

Evaluation evaluate(const SimConfig& c, const Anchors& anchors) {
    Evaluation e;
    e.margin = std::numeric_limits<double>::infinity();
    for (const auto& a : anchors.qber) {
        const auto q = analytic_qber(at(c, a.profile, a.clock_hz, a.length_km));
        if (!q) return {1e12, -1e12, false};
        const double z = (*q - a.target) / a.tolerance;
        e.objective += z * z;
        e.margin = std::min(e.margin, 1.0 - std::abs(z));
        e.satisfied = e.satisfied && std::abs(*q - a.target) <= a.tolerance;
    }
    if (anchors.net_rate) {
        const auto& a = *anchors.net_rate;
        const double net = std::max(predict(at(c, a.profile, a.clock_hz, a.length_km)).net_rate_bps, 1.0);
        // Order-of-magnitude anchor, judged on a log scale.
        const double z = std::log2(net / a.target_bps) /
                         std::log2((net >= a.target_bps ? a.high_bps : a.low_bps) / a.target_bps);
        e.objective += z * z;
        e.margin = std::min(e.margin, 1.0 - std::abs(z));
        e.satisfied = e.satisfied && net >= a.low_bps && net <= a.high_bps;
    }
    return e;
}

// Coordinate descent with step halving. `better(a, b)` says whether a beats b.
template <class Better>
int descend(SimConfig& best, Evaluation& best_eval, const Anchors& anchors, int max_sweeps, Better better) {
    auto params = free_parameters(best);
    std::vector<double> step;
    for (const auto& p : params) step.push_back(0.25 * (p.hi - p.lo));
    int sweeps = 0;
    while (sweeps < max_sweeps) {
        bool improved = false;
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double x = params[i].get(best);
            for (double dir : {+1.0, -1.0}) {
                const double y = std::clamp(x + dir * step[i], params[i].lo, params[i].hi);
                if (y == x) continue;
                SimConfig trial = best;
                params[i].set(trial, y);
                if (!feasible(trial)) continue;
                const auto e = evaluate(trial, anchors);
                if (better(e, best_eval)) {
                    best = std::move(trial);
                    best_eval = e;
                    improved = true;
                    break;
                }
            }
        }
        ++sweeps;
        if (!improved) {
            bool converged = true;
            for (std::size_t i = 0; i < params.size(); ++i) {
                step[i] /= 2.0;
                converged = converged && step[i] < 1e-5 * (params[i].hi - params[i].lo);
            }
            if (converged) break;
        }
    }
    return sweeps;
}


} // namespace

const std::vector<std::string>& calibration_parameters() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n;
        for (const auto& p : free_parameters(SimConfig{})) n.push_back(p.name);
        return n;
    }();
    return names;
}

std::int64_t slots_for_sifted_bits(const LinkConfig& config, double target_bits, std::int64_t min_slots,
                                   std::int64_t max_slots) {
    const double sift = analytic_rates(config).sift_rate_bps;
    if (!(sift > 0.0)) return max_slots;
    const double n = target_bits / sift * config.source.clock_hz;
    return std::clamp(static_cast<std::int64_t>(std::ceil(n)), min_slots, max_slots);
}

CalibrationResult calibrate(const SimConfig& start, const Anchors& anchors, const CalibrationOptions& options) {
    start.validate();
    CalibrationResult result;
    SimConfig best = start;
    Evaluation best_eval = evaluate(best, anchors);

    if (!best_eval.satisfied) {
        // Least squares first, then centre the fit inside the tolerance boxes
        // so Monte Carlo noise at the anchors cannot tip it over an edge.
        result.iterations += descend(best, best_eval, anchors, options.max_sweeps,
                                     [](const Evaluation& a, const Evaluation& b) {
                                         return a.objective < b.objective - 1e-12;
                                     });
        result.iterations += descend(best, best_eval, anchors, options.max_sweeps,
                                     [](const Evaluation& a, const Evaluation& b) {
                                         return a.margin > b.margin + 1e-9;
                                     });
        best.name = "calibrated";
    }

    result.fitted = best;
    result.objective = best_eval.objective;
    result.success = best_eval.satisfied;

    std::uint64_t k = 0;
    for (const auto& a : anchors.qber) {
        AnchorOutcome o;
        o.label = a.profile + " qber @ " + format_number(a.clock_hz / 1e9) + " GHz, " + format_number(a.length_km) + " km";
        o.target = a.target;
        o.tolerance = a.tolerance;
        const auto link = at(best, a.profile, a.clock_hz, a.length_km);
        o.analytic = analytic_qber(link).value_or(0.5);
        if (options.run_monte_carlo) {
            Rng rng(hash_combine(options.seed, ++k));
            const auto s = run_link(link, slots_for_sifted_bits(link, options.mc_target_bits), rng).summary;
            o.monte_carlo = s.qber;
            o.monte_carlo_err = s.statistical_error_qber;
            result.success = result.success && s.qber && std::abs(*s.qber - a.target) <= a.tolerance;
        }
        result.qber.push_back(o);
    }
    if (anchors.net_rate) {
        const auto& a = *anchors.net_rate;
        AnchorOutcome o;
        o.label = a.profile + " net rate (bit/s) @ " + format_number(a.clock_hz / 1e9) + " GHz, " +
                  format_number(a.length_km) + " km";
        o.target = a.target_bps;
        o.tolerance = a.high_bps - a.target_bps;
        const auto link = at(best, a.profile, a.clock_hz, a.length_km);
        o.analytic = predict(link).net_rate_bps;
        if (options.run_monte_carlo) {
            Rng rng(hash_combine(options.seed, ++k));
            const auto s = run_link(link, slots_for_sifted_bits(link, options.mc_target_bits), rng).summary;
            o.monte_carlo = s.net_rate_bps;
            result.success = result.success && s.net_rate_bps >= a.low_bps && s.net_rate_bps <= a.high_bps;
        }
        result.net_rate = o;
    }
    return result;
}

std::string CalibrationResult::report() const {
    std::ostringstream o;
    o << "calibration " << (success ? "succeeded" : "FAILED") << " after " << iterations
      << " iterations (objective " << format_number(objective) << ")\n";
    o << "fitted parameters:\n";
    for (const auto& p : free_parameters(fitted)) {
        double v = p.get(fitted);
        if (p.name == "emitter_bandwidth_hz") v = std::pow(10.0, v);
        o << "  " << p.name << " = " << format_number(v) << '\n';
    }
    o << "anchors:\n";
    const auto line = [&](const AnchorOutcome& a) {
        o << "  " << a.label << ": target " << format_number(a.target) << " (+/- " << format_number(a.tolerance)
          << "), analytic " << format_number(a.analytic) << " (residual " << format_number(a.analytic - a.target) << ")";
        if (a.monte_carlo)
            o << ", monte carlo " << format_number(*a.monte_carlo)
              << (a.monte_carlo_err > 0.0 ? " +/- " + format_number(a.monte_carlo_err) : std::string());
        o << '\n';
    };
    for (const auto& a : qber) line(a);
    if (net_rate) line(*net_rate);
    return o.str();
}

} // namespace b92
