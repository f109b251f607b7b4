#pragma once

// Closed-form link model. Independent of the Monte Carlo engine apart from
// the shared configuration types; used both as its oracle and as the fast
// path for calibration.

#include <optional>
#include <span>

#include "b92sim/protocol.hpp"

namespace b92 {

struct TimingBudget {
    double emitter_fwhm_ps = 0.0;
    double channel_fwhm_ps = 0.0;
    double detector_fwhm_ps = 0.0;
    double sync_fwhm_ps = 0.0;

    double total_fwhm_ps() const;
};

/// Quadrature sum of independent Gaussian widths.
double total_system_fwhm(std::span<const double> components);

struct GateLeakage {
    double p_wrong_slot = 0.0;
    double p_rejected = 0.0;
};

/// Gaussian arrival of the given FWHM, displaced by centroid_offset_ps from the
/// slot center. p_wrong_slot is the mass landing nearer a neighbouring slot
/// center and inside that slot's gate; p_rejected is the mass inside no gate.
/// Every slot within 8 sigma of the pulse is summed, not just the adjacent ones.
GateLeakage gate_leakage(double total_fwhm_ps, double clock_hz, const GateSpec& gate,
                         double centroid_offset_ps = 0.0);

/// Fraction of time covered by accepting gates (dark-count acceptance).
double gate_time_fraction(double clock_hz, const GateSpec& gate);

struct RateEstimate {
    double incident_per_arm_cps = 0.0;        // signal clicks before dead time
    double detected_per_arm_cps = 0.0;        // signal + dark, after dead time
    double signal_detected_per_arm_cps = 0.0;
    double dark_detected_per_arm_cps = 0.0;
    double detected_total_cps = 0.0;
    double sift_rate_bps = 0.0;
};

/// Per-detector rate used to index the jitter table.
double detector_rate_cps(const LinkConfig& config);

TimingBudget timing_budget(const LinkConfig& config);

RateEstimate analytic_rates(const LinkConfig& config);

/// Sifted QBER prediction; empty when no event is accepted at all.
std::optional<double> analytic_qber(const LinkConfig& config);

struct AnalyticPrediction {
    RateEstimate rates;
    TimingBudget budget;
    GateLeakage leakage;
    double centroid_shift_ps = 0.0;
    std::optional<double> qber;
    double net_rate_bps = 0.0;
};

AnalyticPrediction predict(const LinkConfig& config);

} // namespace b92
