#pragma once

// Bob's silicon SPAD modules. The timing response is indexed by the count
// rate the device experiences: both the jitter FWHM and the centroid of the
// response move at high rate for the unmodified module.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "b92sim/random.hpp"

namespace b92 {

struct JitterPoint {
    double rate_cps = 0.0;
    double fwhm_ps = 0.0;
};

struct DetectorProfile {
    std::string name;
    double efficiency = 0.45;
    double dark_cps = 250.0;
    double dead_time_ns = 50.0;
    std::vector<JitterPoint> jitter_table;   // strictly increasing in rate
    double centroid_alpha = 0.0;
    double tail_fraction = 0.0;              // share of events in the diffusion tail
    double tail_tau_ps = 0.0;

    void validate() const;

    /// Unmodified SPCM-AQR: 570 ps at low rate, 950 ps at 2 Mcps.
    static DetectorProfile standard();
    /// Module with the improved timing circuit: 370 ps -> 450 ps, no centroid drift.
    static DetectorProfile enhanced();
    /// "standard" or "enhanced"; throws ConfigError otherwise.
    static DetectorProfile builtin(const std::string& name);
};

enum class Origin { Signal, Dark };

struct DetectionEvent {
    int detector_id = 0;
    double timestamp_ps = 0.0;
    Origin origin = Origin::Signal;
    /// Diagnostic ground truth: slot that emitted the photon, -1 for darks.
    /// Never consulted by sifting.
    std::int64_t emitted_slot = -1;
};

/// Log-linear interpolation in rate over the jitter table, clamped at both ends.
double jitter_fwhm_at(const DetectorProfile& profile, double rate_cps);

/// alpha * (fwhm(rate) - fwhm(low-rate limit)).
double centroid_shift_at(const DetectorProfile& profile, double rate_cps);

/// Detector output time for a photon arriving at true_arrival_ps.
///
/// Core response is a Gaussian of the rate-indexed FWHM, displaced by the
/// rate-indexed centroid shift. With probability tail_fraction the event is
/// instead a late diffusion-tail event whose delay is exponential with
/// scale tail_tau_ps.
double sample_response_time(const DetectorProfile& profile, double rate_cps,
                            double true_arrival_ps, Rng& rng);

/// Malus-law click probability behind a linear analyzer.
double click_probability(double pol_angle_deg, double analyzer_angle_deg, double efficiency);

/// Non-paralyzable dead time, applied independently per detector_id.
/// Events must be time-ordered within each detector; throws UsageError otherwise.
std::vector<DetectionEvent> apply_dead_time(std::span<const DetectionEvent> events, double dead_time_ns);

/// Homogeneous Poisson dark counts on [0, duration_ps), time-ordered.
std::vector<DetectionEvent> generate_dark_counts(double dark_cps, double duration_ps,
                                                 int detector_id, Rng& rng);

/// Detected rate of a non-paralyzable counter driven at incident_cps.
double dead_time_corrected_rate(double incident_cps, double dead_time_ns);

/// Histogram-based full width at half maximum of a sample, in the sample's units.
/// Used to characterise simulated timing responses.
double empirical_fwhm(std::span<const double> samples);

} // namespace b92
