#pragma once

// The B92 link engine.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "b92sim/detector.hpp"
#include "b92sim/photonics.hpp"
#include "b92sim/postproc.hpp"
#include "b92sim/random.hpp"

namespace b92 {

/// Acquisition window. Its center is locked to the sync-derived slot center
/// for the whole run; it never follows drift of the detector response.
struct GateSpec {
    double gate_fraction = 1.0;
    double window_offset_ps = 0.0;

    void validate() const;
};

/// Everything run_link needs for one operating point.
struct LinkConfig {
    SourceSpec source;
    ChannelSpec channel;
    DetectorProfile detector = DetectorProfile::enhanced();
    GateSpec gate;
    double sync_fwhm_ps = 100.0;   // Ge APD clock-recovery jitter
    SecurityParams security;

    void validate() const;
};

/// Analyzer arms: detector 0 sits behind the 135 deg analyzer (conclusive for
/// bit 0), detector 1 behind the 90 deg analyzer (conclusive for bit 1).
inline constexpr double kAnalyzerAngleDeg[2] = {135.0, 90.0};

struct B92Outcome {
    bool conclusive = false;
    int bit = 0;
    int detector_id = 0;   // arm the photon was routed to
};

struct SlotDetection {
    int detector_id = 0;
    double timestamp_ps = 0.0;
    bool accepted_by_gate = false;
    Origin origin = Origin::Signal;
    std::int64_t emitted_slot = -1;   // ground truth, -1 for darks
};

struct SlotRecord {
    std::int64_t slot_index = 0;
    int alice_bit = 0;
    std::int64_t photons_emitted = 0;
    std::int64_t photons_arrived = 0;
    std::vector<SlotDetection> detections;   // events assigned to this slot
};

struct SiftedKey {
    std::vector<std::int64_t> slot_indices;
    BitString alice_bits;
    BitString bob_bits;

    std::size_t size() const { return slot_indices.size(); }
};

struct QberEstimate {
    double qber = 0.0;
    double statistical_error = 0.0;
    std::int64_t errors = 0;
    std::int64_t bits = 0;
};

struct RunSummary {
    double clock_hz = 0.0;
    double length_km = 0.0;
    std::string profile_name;
    ChannelMode channel_mode = ChannelMode::FullFiber;
    std::int64_t slots_simulated = 0;
    double detected_rate_cps[2] = {0.0, 0.0};
    double detected_rate_total_cps = 0.0;
    double sift_rate_bps = 0.0;
    std::optional<double> qber;   // empty when nothing was sifted
    double statistical_error_qber = 0.0;
    double net_rate_bps = 0.0;
    std::int64_t sifted_bits = 0;
    std::int64_t sifted_errors = 0;
    std::int64_t double_click_slots = 0;
    std::int64_t gate_rejected = 0;
};

struct RunOptions {
    bool keep_slot_records = false;
};

struct LinkResult {
    RunSummary summary;
    SiftedKey sifted;
    std::vector<SlotRecord> slots;   // only when RunOptions::keep_slot_records
};

/// One photon through the passive B92 receiver: a 50/50 split picks the
/// analyzer, the photon then clicks with the Malus-law probability.
B92Outcome measure_b92(double pol_angle_deg, Rng& rng, const double (&efficiency)[2]);

struct SlotAssignment {
    std::int64_t slot_index = 0;
    bool accepted = false;
};

/// Nearest slot center; accepted when within the gate around that center.
SlotAssignment assign_slot(double timestamp_ps, double clock_hz, const GateSpec& gate);

/// Mismatch fraction with binomial standard error; empty for an empty key.
std::optional<QberEstimate> compute_qber(const SiftedKey& key);

/// Simulates n_slots clock periods of the link.
///
/// Slots without any photon reaching Bob are skipped in bulk (geometric gaps),
/// which is exact for Poisson sources because channel loss thins a Poisson
/// photon number into independent arrived/lost Poisson parts. Cost therefore
/// scales with arrivals and dark counts rather than slot count. Alice's bit for
/// slot k is a keyed hash of k, so any slot can be checked against ground truth.
LinkResult run_link(const LinkConfig& config, std::int64_t n_slots, Rng& rng,
                    const RunOptions& options = {});

} // namespace b92
