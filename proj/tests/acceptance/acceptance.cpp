// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
// Every criterion that depends on fitted parameters uses the configuration
// produced by calibrate() from the built-in defaults, exactly as the CLI would.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "b92sim/harness.hpp"

using namespace b92;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail += (detail.empty() ? "" : "; ") + std::string("violated: ") + what;
        }
    }
    void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

int failures = 0;

void report(int id, const char* title, const std::function<Outcome()>& body) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail = std::string("exception: ") + e.what();
    }
    if (!o.pass) ++failures;
    std::printf("%s  C%-2d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
}

LinkConfig at(const SimConfig& c, const std::string& profile, double clock_hz, double length_km,
              ChannelMode mode = ChannelMode::FullFiber) {
    LinkConfig l = c.link(profile);
    l.source.clock_hz = clock_hz;
    l.channel.length_km = length_km;
    l.channel.mode = mode;
    return l;
}

RunSummary monte_carlo(const LinkConfig& l, double target_bits, std::uint64_t seed) {
    Rng rng(seed);
    return run_link(l, slots_for_sifted_bits(l, target_bits), rng).summary;
}

const ResultRow& find(const ResultTable& t, double x, const std::string& profile, ChannelMode mode) {
    for (const auto& r : t)
        if (r.axis_value == x && r.profile == profile && r.mode == mode) return r;
    throw std::runtime_error("missing row");
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

} // namespace

int main() {
    const auto t_start = Clock::now();

    CalibrationOptions copts;
    copts.run_monte_carlo = false;
    const auto cal = calibrate(SimConfig{}, Anchors::reference(), copts);
    const SimConfig& fitted = cal.fitted;
    std::printf("calibration: %s, %d iterations, gate_fraction %.4f, sync_fwhm_ps %.2f, dark_cps %.1f\n",
                cal.success ? "ok" : "FAILED", cal.iterations, fitted.gate.gate_fraction, fitted.sync_fwhm_ps,
                fitted.dark_cps);

    RunSummary anchor_std, anchor_enh;

    report(1, "anchor reproduction (2 GHz, 6.55 km)", [&] {
        Outcome o;
        o.require(cal.success, "calibration converged inside both tolerances");
        anchor_enh = monte_carlo(at(fitted, "enhanced", 2e9, 6.55), 1e6, 101);
        anchor_std = monte_carlo(at(fitted, "standard", 2e9, 6.55), 1e6, 102);
        const double qe = anchor_enh.qber.value_or(1.0), qs = anchor_std.qber.value_or(1.0);
        o.note("enhanced " + fmt("%.4f", qe) + " +/- " + fmt("%.4f", anchor_enh.statistical_error_qber) +
               " (want 0.066 +/- 0.015)");
        o.note("standard " + fmt("%.4f", qs) + " +/- " + fmt("%.4f", anchor_std.statistical_error_qber) +
               " (want 0.178 +/- 0.025)");
        o.require(std::abs(qe - 0.066) <= 0.015, "enhanced anchor");
        o.require(std::abs(qs - 0.178) <= 0.025, "standard anchor");

        double worst = 0.0;
        for (const char* p : {"standard", "enhanced"}) {
            Rng rng(7);
            const auto t0 = Clock::now();
            run_link(at(fitted, p, 2e9, 6.55), 2'000'000, rng);
            worst = std::max(worst, seconds_since(t0));
        }
        o.note("runtime per 2e6-slot point " + fmt("%.4f", worst) + " s");
        o.require(worst <= 60.0, "runtime per 2e6-slot point <= 60 s");
        return o;
    });

    report(2, "clock sweep trend at 6.55 km", [&] {
        Outcome o;
        auto spec = preset("fig2", fitted);
        spec.target_sifted_bits = 2e5;
        const auto t = run_sweep(spec, 1);
        double max_enh = 0.0;
        for (double x : spec.points) {
            const auto& s = find(t, x, "standard", ChannelMode::FullFiber);
            const auto& e = find(t, x, "enhanced", ChannelMode::FullFiber);
            const double qs = s.qber.value_or(0.5), qe = e.qber.value_or(0.5);
            const double tol = 3.0 * std::hypot(s.qber_err, e.qber_err);
            o.require(qe < qs + tol, "enhanced < standard at " + fmt("%.1f GHz", x / 1e9));
            o.require(qe < 0.10 + 3.0 * e.qber_err, "enhanced < 0.10 at " + fmt("%.1f GHz", x / 1e9));
            max_enh = std::max(max_enh, qe);
        }
        const auto& s2 = find(t, 2e9, "standard", ChannelMode::FullFiber);
        o.require(s2.qber.value_or(0.0) > 0.10 - 3.0 * s2.qber_err, "standard > 0.10 at 2 GHz");
        o.note("enhanced max " + fmt("%.4f", max_enh) + ", standard at 1 GHz " +
               fmt("%.4f", find(t, 1e9, "standard", ChannelMode::FullFiber).qber.value_or(-1)) + ", at 2 GHz " +
               fmt("%.4f", s2.qber.value_or(-1)));
        return o;
    });

    report(3, "distance sweep trends at 2 GHz", [&] {
        Outcome o;
        auto spec = preset("fig3", fitted);
        spec.target_sifted_bits = 2e5;
        const auto t = run_sweep(spec, 1);
        const auto fib = ChannelMode::FullFiber, att = ChannelMode::AttenuatorOnly;
        for (std::size_t i = 1; i + 1 < spec.points.size(); ++i) {
            const auto& a = find(t, spec.points[i], "enhanced", fib);
            const auto& b = find(t, spec.points[i + 1], "enhanced", fib);
            o.require(*b.qber >= *a.qber - 3.0 * std::hypot(a.qber_err, b.qber_err),
                      "enhanced non-decreasing " + fmt("%.2f", a.axis_value) + " -> " + fmt("%.2f km", b.axis_value));
        }
        const auto& near = find(t, 0.1, "standard", fib);
        const auto& two = find(t, 2.0, "standard", fib);
        o.require(*near.qber > *two.qber, "standard at 0.1 km above 2 km");
        o.note("standard 0.1 km " + fmt("%.4f", *near.qber) + " vs 2 km " + fmt("%.4f", *two.qber));
        int compared = 0;
        for (double x : spec.points)
            for (const char* p : {"standard", "enhanced"}) {
                const auto& f = find(t, x, p, fib);
                const auto& a = find(t, x, p, att);
                o.require(*a.qber <= *f.qber + 3.0 * std::hypot(a.qber_err, f.qber_err),
                          std::string(p) + " attenuator <= fiber at " + fmt("%.2f km", x));
                ++compared;
            }
        o.note(std::to_string(compared) + " attenuator/fiber pairs, enhanced 2..15 km " +
               fmt("%.4f", *find(t, 2.0, "enhanced", fib).qber) + " .. " +
               fmt("%.4f", *find(t, 15.0, "enhanced", fib).qber));
        return o;
    });

    report(4, "net rate at 2 GHz, 6.55 km", [&] {
        Outcome o;
        o.require(anchor_std.net_rate_bps == 0.0, "standard net rate is zero");
        o.require(anchor_enh.net_rate_bps >= 10e3 && anchor_enh.net_rate_bps <= 40e3, "enhanced in [10, 40] kbit/s");
        o.note("standard " + fmt("%.0f", anchor_std.net_rate_bps) + " bit/s, enhanced " +
               fmt("%.0f", anchor_enh.net_rate_bps) + " bit/s (sift " + fmt("%.0f", anchor_enh.sift_rate_bps) + ")");
        return o;
    });

    report(5, "operating count rate, 1-2 GHz, 0.1 km", [&] {
        Outcome o;
        double lo = 1e30, hi = 0.0;
        std::uint64_t seed = 500;
        for (double clock : {1e9, 1.5e9, 2e9})
            for (const char* p : {"standard", "enhanced"}) {
                Rng rng(++seed);
                const auto s = run_link(at(fitted, p, clock, 0.1), 20'000'000, rng).summary;
                lo = std::min(lo, s.detected_rate_total_cps);
                hi = std::max(hi, s.detected_rate_total_cps);
                o.require(s.detected_rate_total_cps >= 0.5e6 && s.detected_rate_total_cps <= 1.5e6,
                          std::string(p) + " at " + fmt("%.1f GHz", clock / 1e9));
            }
        o.note("total detected " + fmt("%.3g", lo) + " .. " + fmt("%.3g", hi) + " cps (want 0.5e6 .. 1.5e6)");
        return o;
    });

    report(6, "analytic vs Monte Carlo on the 18-point grid", [&] {
        Outcome o;
        const auto t0 = Clock::now();
        double worst = 0.0;
        std::string where;
        std::uint64_t seed = 600;
        for (double clock : {1e9, 1.5e9, 2e9})
            for (double L : {0.1, 6.55, 15.0})
                for (const char* p : {"standard", "enhanced"}) {
                    const auto l = at(fitted, p, clock, L);
                    const auto s = monte_carlo(l, 5e4, ++seed);
                    const double qa = analytic_qber(l).value_or(0.5);
                    const double gap = std::abs(*s.qber - qa);
                    const double tol = std::max(0.02, 3.0 * s.statistical_error_qber);
                    const std::string tag = std::string(p) + fmt(" %.1f GHz", clock / 1e9) + fmt(" %.2f km", L);
                    o.require(gap <= tol, tag);
                    if (gap > worst) {
                        worst = gap;
                        where = tag;
                    }
                }
        const double secs = seconds_since(t0);
        o.require(secs <= 600.0, "runtime <= 10 min");
        o.note("largest |analytic - MC| " + fmt("%.4f", worst) + " at " + where);
        return o;
    });

    report(7, "detector response widths", [&] {
        Outcome o;
        struct Case {
            const char* profile;
            double rate, want, tol;
        };
        const Case cases[] = {{"standard", 2e6, 950, 40}, {"enhanced", 2e6, 450, 20},
                              {"standard", 1e3, 570, 25}, {"enhanced", 1e3, 370, 17}};
        std::uint64_t seed = 700;
        for (const auto& c : cases) {
            const auto p = DetectorProfile::builtin(c.profile);
            Rng rng(++seed);
            std::vector<double> v(1'000'000);
            for (auto& x : v) x = sample_response_time(p, c.rate, 0.0, rng);
            const double w = empirical_fwhm(v);
            o.require(std::abs(w - c.want) <= c.tol, std::string(c.profile) + fmt(" @ %.0g cps", c.rate));
            o.note(std::string(c.profile) + fmt(" %.0g cps: ", c.rate) + fmt("%.1f ps", w));
        }
        return o;
    });

    report(8, "ideal B92 brute force", [&] {
        Outcome o;
        LinkConfig c;
        c.source.single_photon = true;
        c.source.base_pulse_fwhm_ps = 1e-9;
        c.channel.length_km = 0.0;
        c.channel.excess_loss_db = 0.0;
        c.channel.broadening_ps_per_km = 0.0;
        c.detector.efficiency = 1.0;
        c.detector.dark_cps = 0.0;
        c.detector.dead_time_ns = 0.0;
        c.detector.jitter_table = {{1e3, 1e-9}, {2e6, 1e-9}};
        c.sync_fwhm_ps = 0.0;
        Rng rng(800);
        const auto s = run_link(c, 1'000'000, rng).summary;
        const double frac = static_cast<double>(s.sifted_bits) / 1e6;
        o.require(s.qber && *s.qber == 0.0, "QBER exactly 0");
        o.require(std::abs(frac - 0.25) <= 0.002, "sift fraction 0.25 +/- 0.002");
        o.note("QBER " + fmt("%.6f", s.qber.value_or(-1)) + ", sift fraction " + fmt("%.5f", frac));
        return o;
    });

    report(9, "post-processing", [&] {
        Outcome o;
        Rng rng(900);
        int clean = 0;
        for (int trial = 0; trial < 100; ++trial) {
            BitString a(10000), b(10000);
            for (std::size_t i = 0; i < a.size(); ++i) {
                a[i] = static_cast<std::uint8_t>(rng() & 1U);
                b[i] = static_cast<std::uint8_t>(a[i] ^ (uniform01(rng) < 0.066));
            }
            clean += reconcile(a, b, 0.066, rng).report.residual_errors == 0;
        }
        o.require(clean >= 99, "Cascade clean in >= 99/100 trials");
        o.note("Cascade clean " + std::to_string(clean) + "/100");

        BitString x(5000), y(5000), xy(5000);
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = static_cast<std::uint8_t>(rng() & 1U);
            y[i] = static_cast<std::uint8_t>(rng() & 1U);
            xy[i] = x[i] ^ y[i];
        }
        bool det = true, lin = true;
        for (std::uint64_t seed : {1ULL, 77ULL, 0x123456789ULL}) {
            const auto hx = privacy_amplify(x, seed, 2000);
            det = det && hx == privacy_amplify(x, seed, 2000);
            const auto hy = privacy_amplify(y, seed, 2000), hxy = privacy_amplify(xy, seed, 2000);
            for (std::size_t i = 0; i < hxy.size(); ++i) lin = lin && hxy[i] == (hx[i] ^ hy[i]);
        }
        o.require(det, "Toeplitz determinism");
        o.require(lin, "Toeplitz GF(2) linearity");
        o.require(binary_entropy(0.0) == 0.0 && binary_entropy(0.5) == 1.0, "h2(0) = 0 and h2(0.5) = 1 exactly");
        o.note(std::string("Toeplitz deterministic and linear: ") + (det && lin ? "yes" : "no"));
        return o;
    });

    report(10, "reproducibility across worker counts", [&] {
        Outcome o;
        auto spec = preset("fig3", fitted);
        spec.trials_per_point = 2;
        spec.target_sifted_bits = 2e4;
        const auto dir = fs::temp_directory_path() / "b92sim_acceptance";
        fs::remove_all(dir);
        emit_results(run_sweep(spec, 1), dir / "w1.csv", spec.axis, "w1");
        emit_results(run_sweep(spec, 8), dir / "w8.csv", spec.axis, "w8");
        emit_results(run_sweep(spec, 1), dir / "again.csv", spec.axis, "again");
        const auto a = slurp(dir / "w1.csv"), b = slurp(dir / "w8.csv"), c = slurp(dir / "again.csv");
        o.require(!a.empty() && a == b, "1 worker == 8 workers");
        o.require(a == c, "repeat run identical");
        o.note(std::to_string(std::count(a.begin(), a.end(), '\n')) + "-line CSV identical for 1 and 8 workers");
        fs::remove_all(dir);
        return o;
    });

    std::printf("%d of 10 criteria failed; total %.1f s\n", failures, seconds_since(t_start));
    return failures == 0 ? 0 : 1;
}
