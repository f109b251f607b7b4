#include "b92sim/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <unordered_map>

#include "b92sim/analytics.hpp"
#include "b92sim/errors.hpp"

namespace b92 {

void GateSpec::validate() const {
    if (!(gate_fraction > 0.0 && gate_fraction <= 1.0)) throw ConfigError("gate_fraction must be in (0,1]");
    if (!std::isfinite(window_offset_ps)) throw ConfigError("window_offset_ps must be finite");
}

void LinkConfig::validate() const {
    source.validate();
    channel.validate();
    detector.validate();
    gate.validate();
    security.validate();
    if (!(sync_fwhm_ps >= 0.0)) throw ConfigError("sync_fwhm_ps must be >= 0");
}

B92Outcome measure_b92(double pol_angle_deg, Rng& rng, const double (&efficiency)[2]) {
    const int arm = uniform01(rng) < 0.5 ? 0 : 1;
    const double p = click_probability(pol_angle_deg, kAnalyzerAngleDeg[arm], efficiency[arm]);
    B92Outcome out;
    out.detector_id = arm;
    out.bit = arm;
    out.conclusive = uniform01(rng) < p;
    return out;
}

SlotAssignment assign_slot(double timestamp_ps, double clock_hz, const GateSpec& gate) {
    const double slot_ps = 1e12 / clock_hz;
    SlotAssignment a;
    a.slot_index = std::llround(timestamp_ps / slot_ps);
    const double center = static_cast<double>(a.slot_index) * slot_ps + gate.window_offset_ps;
    a.accepted = std::abs(timestamp_ps - center) <= gate.gate_fraction * slot_ps / 2.0;
    return a;
}

std::optional<QberEstimate> compute_qber(const SiftedKey& key) {
    if (key.alice_bits.size() != key.bob_bits.size())
        throw UsageError("compute_qber: alice and bob keys differ in length");
    if (key.bob_bits.empty()) return std::nullopt;
    QberEstimate q;
    q.bits = static_cast<std::int64_t>(key.bob_bits.size());
    for (std::size_t i = 0; i < key.bob_bits.size(); ++i)
        q.errors += key.alice_bits[i] != key.bob_bits[i];
    q.qber = static_cast<double>(q.errors) / static_cast<double>(q.bits);
    q.statistical_error = std::sqrt(q.qber * (1.0 - q.qber) / static_cast<double>(q.bits));
    return q;
}

namespace {

struct Accepted {
    std::int64_t slot;
    int detector_id;
};

} // namespace

LinkResult run_link(const LinkConfig& config, std::int64_t n_slots, Rng& rng, const RunOptions& options) {
    config.validate();
    if (n_slots <= 0) throw ConfigError("n_slots must be > 0");

    const double slot_ps = config.source.slot_ps();
    const double duration_ps = static_cast<double>(n_slots) * slot_ps;
    const double mu = config.source.mean_photon_number;
    const double transmittance = channel_transmittance(config.channel);
    const bool single = config.source.single_photon;
    const double arrive_mean = mu * transmittance;
    const double lost_mean = mu * (1.0 - transmittance);
    // Chance that at least one photon reaches Bob in a slot.
    const double p_arrival = single ? transmittance : -std::expm1(-arrive_mean);

    const auto& profile = config.detector;
    const double rate = detector_rate_cps(config);
    const double emit_sigma = fwhm_to_sigma(emitter_pulse_fwhm(config.source));
    const double chan_sigma = fwhm_to_sigma(channel_broadening_fwhm(config.channel));
    const double sync_sigma = fwhm_to_sigma(config.sync_fwhm_ps);
    const double efficiency[2] = {profile.efficiency, profile.efficiency};

    const std::uint64_t bit_key = rng();
    const std::uint64_t record_key = rng();
    const auto alice_bit = [bit_key](std::int64_t slot) {
        return static_cast<int>(hash_combine(bit_key, static_cast<std::uint64_t>(slot)) & 1U);
    };

    std::vector<DetectionEvent> events[2];
    std::vector<SlotRecord> records;
    std::unordered_map<std::int64_t, std::size_t> record_index;

    if (p_arrival > 0.0) {
        // geometric_distribution needs p < 1; a lossless channel never skips.
        const bool every_slot = p_arrival >= 1.0;
        std::geometric_distribution<std::int64_t> gap(every_slot ? 0.5 : p_arrival);
        std::int64_t slot = -1;
        for (;;) {
            const std::int64_t skip = every_slot ? 0 : gap(rng);
            if (skip >= n_slots - slot - 1) break;
            slot += skip + 1;

            const std::int64_t arrived = single ? 1 : zero_truncated_poisson(arrive_mean, rng);
            const int bit = alice_bit(slot);
            const double pol = encode_bit(bit);
            for (std::int64_t p = 0; p < arrived; ++p) {
                const auto outcome = measure_b92(pol, rng, efficiency);
                if (!outcome.conclusive) continue;
                const double arrival = static_cast<double>(slot) * slot_ps + gaussian(rng, emit_sigma) +
                                       gaussian(rng, chan_sigma);
                const double ts = sample_response_time(profile, rate, arrival, rng) + gaussian(rng, sync_sigma);
                if (ts >= 0.0) events[outcome.detector_id].push_back({outcome.detector_id, ts, Origin::Signal, slot});
            }
            if (options.keep_slot_records) {
                SlotRecord rec;
                rec.slot_index = slot;
                rec.alice_bit = bit;
                rec.photons_arrived = arrived;
                Rng slot_rng(hash_combine(record_key, static_cast<std::uint64_t>(slot)));
                rec.photons_emitted = single ? 1 : arrived + draw_photon_number(lost_mean, slot_rng);
                record_index.emplace(slot, records.size());
                records.push_back(std::move(rec));
            }
        }
    }

    RunSummary summary;
    summary.clock_hz = config.source.clock_hz;
    summary.length_km = config.channel.length_km;
    summary.profile_name = profile.name;
    summary.channel_mode = config.channel.mode;
    summary.slots_simulated = n_slots;

    std::vector<Accepted> accepted;
    for (int d = 0; d < 2; ++d) {
        for (auto e : generate_dark_counts(profile.dark_cps, duration_ps, d, rng)) {
            e.timestamp_ps += gaussian(rng, sync_sigma);
            if (e.timestamp_ps >= 0.0) events[d].push_back(e);
        }
        std::stable_sort(events[d].begin(), events[d].end(),
                         [](const DetectionEvent& a, const DetectionEvent& b) { return a.timestamp_ps < b.timestamp_ps; });
        const auto kept = apply_dead_time(events[d], profile.dead_time_ns);
        summary.detected_rate_cps[d] = static_cast<double>(kept.size()) / (duration_ps * 1e-12);

        for (const auto& e : kept) {
            const auto a = assign_slot(e.timestamp_ps, config.source.clock_hz, config.gate);
            if (a.slot_index < 0 || a.slot_index >= n_slots) continue;
            if (a.accepted)
                accepted.push_back({a.slot_index, d});
            else
                ++summary.gate_rejected;
            if (options.keep_slot_records) {
                auto [it, fresh] = record_index.try_emplace(a.slot_index, records.size());
                if (fresh) {
                    // No photon reached Bob in this slot. Lost photons come from a
                    // per-slot stream so keeping records never perturbs the run.
                    Rng slot_rng(hash_combine(record_key, static_cast<std::uint64_t>(a.slot_index)));
                    SlotRecord rec;
                    rec.slot_index = a.slot_index;
                    rec.alice_bit = alice_bit(a.slot_index);
                    rec.photons_emitted = single ? 1 : draw_photon_number(lost_mean, slot_rng);
                    records.push_back(std::move(rec));
                }
                records[it->second].detections.push_back({d, e.timestamp_ps, a.accepted, e.origin, e.emitted_slot});
            }
        }
    }
    summary.detected_rate_total_cps = summary.detected_rate_cps[0] + summary.detected_rate_cps[1];

    std::sort(accepted.begin(), accepted.end(), [](const Accepted& a, const Accepted& b) {
        return a.slot != b.slot ? a.slot < b.slot : a.detector_id < b.detector_id;
    });

    LinkResult result;
    auto& key = result.sifted;
    for (std::size_t i = 0; i < accepted.size();) {
        std::size_t j = i + 1;
        while (j < accepted.size() && accepted[j].slot == accepted[i].slot) ++j;
        if (j - i == 1) {
            key.slot_indices.push_back(accepted[i].slot);
            key.alice_bits.push_back(static_cast<std::uint8_t>(alice_bit(accepted[i].slot)));
            key.bob_bits.push_back(static_cast<std::uint8_t>(accepted[i].detector_id));
        } else {
            ++summary.double_click_slots;
        }
        i = j;
    }

    const double duration_s = duration_ps * 1e-12;
    summary.sifted_bits = static_cast<std::int64_t>(key.size());
    summary.sift_rate_bps = static_cast<double>(key.size()) / duration_s;
    if (const auto q = compute_qber(key)) {
        summary.qber = q->qber;
        summary.statistical_error_qber = q->statistical_error;
        summary.sifted_errors = q->errors;
        summary.net_rate_bps = net_rate(summary.sift_rate_bps, q->qber, config.security);
    }

    if (options.keep_slot_records) {
        std::sort(records.begin(), records.end(),
                  [](const SlotRecord& a, const SlotRecord& b) { return a.slot_index < b.slot_index; });
        result.slots = std::move(records);
    }
    result.summary = std::move(summary);
    return result;
}

} // namespace b92
