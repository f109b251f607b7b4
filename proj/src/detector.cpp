#include "b92sim/detector.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <unordered_map>

#include "b92sim/errors.hpp"

namespace b92 {

void DetectorProfile::validate() const {
    if (!(efficiency > 0.0 && efficiency <= 1.0)) throw ConfigError("efficiency must be in (0,1]");
    if (!(dark_cps >= 0.0)) throw ConfigError("dark_cps must be >= 0");
    if (!(dead_time_ns >= 0.0)) throw ConfigError("dead_time_ns must be >= 0");
    if (jitter_table.size() < 2) throw ConfigError("jitter table needs at least 2 entries");
    for (std::size_t i = 0; i < jitter_table.size(); ++i) {
        if (!(jitter_table[i].rate_cps > 0.0)) throw ConfigError("jitter_rate_cps entries must be > 0");
        if (!(jitter_table[i].fwhm_ps > 0.0)) throw ConfigError("jitter_fwhm_ps entries must be > 0");
        if (i > 0 && !(jitter_table[i].rate_cps > jitter_table[i - 1].rate_cps))
            throw ConfigError("jitter_rate_cps must be strictly increasing");
    }
    if (!(centroid_alpha >= 0.0)) throw ConfigError("centroid_alpha must be >= 0");
    if (!(tail_fraction >= 0.0 && tail_fraction < 1.0)) throw ConfigError("tail_fraction must be in [0,1)");
    if (!(tail_tau_ps >= 0.0)) throw ConfigError("tail_tau_ps must be >= 0");
}

DetectorProfile DetectorProfile::standard() {
    DetectorProfile p;
    p.name = "standard";
    p.jitter_table = {{1e3, 570.0}, {2e6, 950.0}};
    p.centroid_alpha = 0.5;
    return p;
}

DetectorProfile DetectorProfile::enhanced() {
    DetectorProfile p;
    p.name = "enhanced";
    p.jitter_table = {{1e3, 370.0}, {2e6, 450.0}};
    p.centroid_alpha = 0.0;
    return p;
}

DetectorProfile DetectorProfile::builtin(const std::string& name) {
    if (name == "standard") return standard();
    if (name == "enhanced") return enhanced();
    throw ConfigError("profile must be \"standard\" or \"enhanced\", got \"" + name + "\"");
}

double jitter_fwhm_at(const DetectorProfile& profile, double rate_cps) {
    const auto& t = profile.jitter_table;
    if (rate_cps <= t.front().rate_cps) return t.front().fwhm_ps;
    if (rate_cps >= t.back().rate_cps) return t.back().fwhm_ps;
    auto hi = std::upper_bound(t.begin(), t.end(), rate_cps,
                               [](double r, const JitterPoint& p) { return r < p.rate_cps; });
    auto lo = hi - 1;
    const double x = (std::log10(rate_cps) - std::log10(lo->rate_cps)) /
                     (std::log10(hi->rate_cps) - std::log10(lo->rate_cps));
    return lo->fwhm_ps + x * (hi->fwhm_ps - lo->fwhm_ps);
}

double centroid_shift_at(const DetectorProfile& profile, double rate_cps) {
    return profile.centroid_alpha *
           (jitter_fwhm_at(profile, rate_cps) - profile.jitter_table.front().fwhm_ps);
}

double sample_response_time(const DetectorProfile& profile, double rate_cps,
                            double true_arrival_ps, Rng& rng) {
    const double t = true_arrival_ps + centroid_shift_at(profile, rate_cps);
    if (profile.tail_fraction > 0.0 && uniform01(rng) < profile.tail_fraction)
        return t + std::exponential_distribution<double>(1.0 / profile.tail_tau_ps)(rng);
    return t + gaussian(rng, fwhm_to_sigma(jitter_fwhm_at(profile, rate_cps)));
}

double click_probability(double pol_angle_deg, double analyzer_angle_deg, double efficiency) {
    const double d = (pol_angle_deg - analyzer_angle_deg) * std::numbers::pi / 180.0;
    const double c = std::cos(d);
    return efficiency * c * c;
}

std::vector<DetectionEvent> apply_dead_time(std::span<const DetectionEvent> events, double dead_time_ns) {
    const double dead_ps = dead_time_ns * 1e3;
    std::unordered_map<int, double> last_seen;
    std::unordered_map<int, double> last_kept;
    std::vector<DetectionEvent> kept;
    kept.reserve(events.size());
    for (const auto& e : events) {
        auto [seen, fresh] = last_seen.try_emplace(e.detector_id, e.timestamp_ps);
        if (!fresh) {
            if (e.timestamp_ps < seen->second)
                throw UsageError("apply_dead_time: events not time-ordered for detector " +
                                 std::to_string(e.detector_id));
            seen->second = e.timestamp_ps;
        }
        auto it = last_kept.find(e.detector_id);
        if (it == last_kept.end() || e.timestamp_ps - it->second >= dead_ps) {
            last_kept[e.detector_id] = e.timestamp_ps;
            kept.push_back(e);
        }
    }
    return kept;
}

std::vector<DetectionEvent> generate_dark_counts(double dark_cps, double duration_ps,
                                                 int detector_id, Rng& rng) {
    std::vector<DetectionEvent> out;
    if (dark_cps <= 0.0 || duration_ps <= 0.0) return out;
    const double rate_per_ps = dark_cps * 1e-12;
    std::exponential_distribution<double> gap(rate_per_ps);
    for (double t = gap(rng); t < duration_ps; t += gap(rng))
        out.push_back({detector_id, t, Origin::Dark, -1});
    return out;
}

double dead_time_corrected_rate(double incident_cps, double dead_time_ns) {
    return incident_cps / (1.0 + incident_cps * dead_time_ns * 1e-9);
}

double empirical_fwhm(std::span<const double> samples) {
    if (samples.size() < 100) return 0.0;
    std::vector<double> v(samples.begin(), samples.end());
    std::sort(v.begin(), v.end());
    // Bin on a window around the robust core; width ~ IQR/40.
    const auto q = [&](double f) { return v[static_cast<std::size_t>(f * static_cast<double>(v.size() - 1))]; };
    const double iqr = q(0.75) - q(0.25);
    if (iqr <= 0.0) return 0.0;
    const double lo = q(0.001), hi = q(0.999);
    const double width = iqr / 40.0;
    const auto nbins = static_cast<std::size_t>(std::ceil((hi - lo) / width)) + 1;
    std::vector<double> hist(nbins, 0.0);
    for (double x : v) {
        if (x < lo || x > hi) continue;
        hist[std::min(nbins - 1, static_cast<std::size_t>((x - lo) / width))] += 1.0;
    }
    // Light 5-bin boxcar to tame shot noise at the peak.
    std::vector<double> smooth(nbins, 0.0);
    for (std::size_t i = 0; i < nbins; ++i) {
        double s = 0.0;
        int n = 0;
        for (int k = -2; k <= 2; ++k) {
            const auto j = static_cast<std::ptrdiff_t>(i) + k;
            if (j < 0 || j >= static_cast<std::ptrdiff_t>(nbins)) continue;
            s += hist[static_cast<std::size_t>(j)];
            ++n;
        }
        smooth[i] = s / n;
    }
    const auto peak = static_cast<std::size_t>(
        std::max_element(smooth.begin(), smooth.end()) - smooth.begin());
    const double half = smooth[peak] / 2.0;
    const auto center = [&](std::size_t i) { return lo + (static_cast<double>(i) + 0.5) * width; };

    std::size_t l = peak;
    while (l > 0 && smooth[l - 1] >= half) --l;
    std::size_t r = peak;
    while (r + 1 < nbins && smooth[r + 1] >= half) ++r;
    double left = center(l), right = center(r);
    if (l > 0) {
        const double y0 = smooth[l - 1], y1 = smooth[l];
        left = center(l - 1) + (half - y0) / (y1 - y0) * width;
    }
    if (r + 1 < nbins) {
        const double y0 = smooth[r], y1 = smooth[r + 1];
        right = center(r) + (y0 - half) / (y0 - y1) * width;
    }
    return right - left;
}

} // namespace b92
