#include "b92sim/analytics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace b92 {

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Probability that N(mu, sigma) lies in [a, b].
double interval_mass(double a, double b, double mu, double sigma) {
    if (b <= a) return 0.0;
    if (sigma <= 0.0) return (mu >= a && mu <= b) ? 1.0 : 0.0;
    return normal_cdf((b - mu) / sigma) - normal_cdf((a - mu) / sigma);
}

// Accepting interval of slot j, in coordinates relative to slot 0's center:
// the part of slot j's rounding cell that lies inside its gate.
std::array<double, 2> accept_interval(int j, double slot_ps, const GateSpec& gate) {
    const double center = j * slot_ps;
    const double half_gate = gate.gate_fraction * slot_ps / 2.0;
    const double a = std::max(center - slot_ps / 2.0, center + gate.window_offset_ps - half_gate);
    const double b = std::min(center + slot_ps / 2.0, center + gate.window_offset_ps + half_gate);
    return {a, b};
}

} // namespace

double TimingBudget::total_fwhm_ps() const {
    const double c[] = {emitter_fwhm_ps, channel_fwhm_ps, detector_fwhm_ps, sync_fwhm_ps};
    return total_system_fwhm(c);
}

double total_system_fwhm(std::span<const double> components) {
    double sum = 0.0;
    for (double c : components) sum += c * c;
    return std::sqrt(sum);
}

GateLeakage gate_leakage(double total_fwhm_ps, double clock_hz, const GateSpec& gate,
                         double centroid_offset_ps) {
    const double slot_ps = 1e12 / clock_hz;
    const double sigma = fwhm_to_sigma(total_fwhm_ps);
    double own = 0.0, wrong = 0.0;
    // Wide responses reach past the adjacent slots; sum every gate within 8 sigma.
    const int reach = 1 + static_cast<int>(std::ceil((8.0 * sigma + std::abs(centroid_offset_ps)) / slot_ps));
    for (int j = -reach; j <= reach; ++j) {
        const auto [a, b] = accept_interval(j, slot_ps, gate);
        const double m = interval_mass(a, b, centroid_offset_ps, sigma);
        (j == 0 ? own : wrong) += m;
    }
    return {wrong, std::max(0.0, 1.0 - own - wrong)};
}

double gate_time_fraction(double clock_hz, const GateSpec& gate) {
    const double slot_ps = 1e12 / clock_hz;
    const auto [a, b] = accept_interval(0, slot_ps, gate);
    return std::max(0.0, b - a) / slot_ps;
}

double detector_rate_cps(const LinkConfig& config) {
    return analytic_rates(config).detected_per_arm_cps;
}

TimingBudget timing_budget(const LinkConfig& config) {
    TimingBudget b;
    b.emitter_fwhm_ps = emitter_pulse_fwhm(config.source);
    b.channel_fwhm_ps = channel_broadening_fwhm(config.channel);
    b.detector_fwhm_ps = jitter_fwhm_at(config.detector, detector_rate_cps(config));
    b.sync_fwhm_ps = config.sync_fwhm_ps;
    return b;
}

RateEstimate analytic_rates(const LinkConfig& config) {
    RateEstimate r;
    const auto& d = config.detector;
    // Per photon: 1/2 routing to an arm, then cos^2 = 1/2 for the state the arm
    // is conclusive for and 0 for the other state; states are equiprobable.
    const double clicks_per_photon_per_arm = 0.5 * 0.25 * d.efficiency;
    const double photons = config.source.single_photon ? 1.0 : config.source.mean_photon_number;
    r.incident_per_arm_cps = config.source.clock_hz * photons *
                             channel_transmittance(config.channel) * clicks_per_photon_per_arm;
    const double incident = r.incident_per_arm_cps + d.dark_cps;
    r.detected_per_arm_cps = dead_time_corrected_rate(incident, d.dead_time_ns);
    const double live = incident > 0.0 ? r.detected_per_arm_cps / incident : 1.0;
    r.signal_detected_per_arm_cps = r.incident_per_arm_cps * live;
    r.dark_detected_per_arm_cps = d.dark_cps * live;
    r.detected_total_cps = 2.0 * r.detected_per_arm_cps;

    const double rate = r.detected_per_arm_cps;
    const double fwhm = TimingBudget{emitter_pulse_fwhm(config.source), channel_broadening_fwhm(config.channel),
                                     jitter_fwhm_at(d, rate), config.sync_fwhm_ps}
                            .total_fwhm_ps();
    const auto leak = gate_leakage(fwhm, config.source.clock_hz, config.gate,
                                   centroid_shift_at(d, rate));
    r.sift_rate_bps = 2.0 * r.signal_detected_per_arm_cps * (1.0 - leak.p_rejected) +
                      2.0 * r.dark_detected_per_arm_cps * gate_time_fraction(config.source.clock_hz, config.gate);
    return r;
}

AnalyticPrediction predict(const LinkConfig& config) {
    AnalyticPrediction p;
    p.rates = analytic_rates(config);
    p.budget = timing_budget(config);
    p.centroid_shift_ps = centroid_shift_at(config.detector, p.rates.detected_per_arm_cps);
    p.leakage = gate_leakage(p.budget.total_fwhm_ps(), config.source.clock_hz, config.gate, p.centroid_shift_ps);

    const double conclusive = 2.0 * p.rates.signal_detected_per_arm_cps;
    const double dark = 2.0 * p.rates.dark_detected_per_arm_cps * gate_time_fraction(config.source.clock_hz, config.gate);
    const double denom = conclusive * (1.0 - p.leakage.p_rejected) + dark;
    if (denom > 0.0) {
        p.qber = (0.5 * p.leakage.p_wrong_slot * conclusive + 0.5 * dark) / denom;
        p.net_rate_bps = net_rate(p.rates.sift_rate_bps, *p.qber, config.security);
    }
    return p;
}

std::optional<double> analytic_qber(const LinkConfig& config) { return predict(config).qber; }

} // namespace b92
