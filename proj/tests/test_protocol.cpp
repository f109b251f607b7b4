#include <doctest.h>

#include <cmath>

#include "b92sim/analytics.hpp"
#include "b92sim/errors.hpp"
#include "b92sim/harness.hpp"
#include "b92sim/protocol.hpp"

using namespace b92;

namespace {

// Lossless, noiseless, single-photon link.
LinkConfig ideal() {
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
    return c;
}

RunSummary run(const LinkConfig& c, std::int64_t n, std::uint64_t seed) {
    Rng rng(seed);
    return run_link(c, n, rng).summary;
}

bool not_above(const RunSummary& lo, const RunSummary& hi, double k = 3.0) {
    return *lo.qber <= *hi.qber + k * std::hypot(lo.statistical_error_qber, hi.statistical_error_qber);
}

} // namespace

TEST_CASE("B92 measurement") {
    const double eff[2] = {1.0, 1.0};
    Rng rng(1);
    int conclusive0 = 0, conclusive1 = 0, arm0 = 0;
    const int n = 400000;
    for (int i = 0; i < n; ++i) {
        const auto o = measure_b92(encode_bit(0), rng, eff);
        arm0 += o.detector_id == 0;
        if (o.conclusive) (o.bit == 0 ? conclusive0 : conclusive1)++;
        if (o.conclusive) CHECK(o.detector_id == o.bit);
    }
    CHECK(conclusive1 == 0);
    CHECK(static_cast<double>(arm0) / n == doctest::Approx(0.5).epsilon(0.01));
    // Behind the 135 deg analyzer the click probability is 1/2.
    CHECK(static_cast<double>(conclusive0) / arm0 == doctest::Approx(0.5).epsilon(0.01));
    CHECK(static_cast<double>(conclusive0) / n == doctest::Approx(0.25).epsilon(0.01));
}

TEST_CASE("slot assignment") {
    GateSpec full;
    auto a = assign_slot(1500.0, 2e9, full);
    CHECK(a.slot_index == 3);
    CHECK(a.accepted);
    CHECK(assign_slot(1250.0 + 1e-6, 2e9, full).slot_index == 3);
    CHECK(assign_slot(1250.0 - 1e-6, 2e9, full).slot_index == 2);

    GateSpec narrow{0.5, 0.0};
    CHECK(assign_slot(1500.0 + 124.0, 2e9, narrow).accepted);
    CHECK_FALSE(assign_slot(1500.0 + 126.0, 2e9, narrow).accepted);

    GateSpec shifted{0.5, 100.0};
    CHECK(assign_slot(1500.0 + 200.0, 2e9, shifted).accepted);
    CHECK_FALSE(assign_slot(1500.0 - 50.0, 2e9, shifted).accepted);
}

TEST_CASE("jitter pushes 2 Phi(-250/191.1) of events into the wrong slot") {
    Rng rng(6);
    const double sigma = fwhm_to_sigma(450.0);
    const int n = 1000000;
    int wrong = 0;
    for (int i = 0; i < n; ++i) {
        const double t = 10.0 * 500.0 + gaussian(rng, sigma);
        wrong += assign_slot(t, 2e9, GateSpec{}).slot_index != 10;
    }
    CHECK(static_cast<double>(wrong) / n == doctest::Approx(0.19079).epsilon(0.01));
}

TEST_CASE("QBER from a sifted key") {
    SiftedKey k;
    CHECK_FALSE(compute_qber(k).has_value());
    for (int i = 0; i < 10000; ++i) {
        k.slot_indices.push_back(i);
        k.alice_bits.push_back(static_cast<std::uint8_t>(i & 1));
        k.bob_bits.push_back(static_cast<std::uint8_t>(i & 1));
    }
    CHECK(compute_qber(k)->qber == 0.0);
    for (auto& b : k.bob_bits) b ^= 1;
    CHECK(compute_qber(k)->qber == 1.0);
    for (std::size_t i = 0; i < k.size(); ++i) k.bob_bits[i] = static_cast<std::uint8_t>(k.alice_bits[i] ^ (i < 660));
    const auto q = compute_qber(k);
    CHECK(q->qber == doctest::Approx(0.066));
    CHECK(q->statistical_error == doctest::Approx(0.0025).epsilon(0.01));
    CHECK(q->errors == 660);
    CHECK(q->bits == 10000);
}

TEST_CASE("ideal link: no errors, a quarter of slots sift") {
    const auto s = run(ideal(), 1000000, 3);
    REQUIRE(s.qber.has_value());
    CHECK(*s.qber == 0.0);
    CHECK(static_cast<double>(s.sifted_bits) / 1e6 == doctest::Approx(0.25).epsilon(0.008));
    CHECK(s.double_click_slots == 0);
}

TEST_CASE("configuration errors are rejected before running") {
    auto c = ideal();
    c.gate.gate_fraction = 0.0;
    Rng rng(1);
    CHECK_THROWS_AS(run_link(c, 1000, rng), ConfigError);
    CHECK_THROWS_AS(run_link(ideal(), 0, rng), ConfigError);
}

TEST_CASE("determinism and record-keeping transparency") {
    LinkConfig c;
    c.channel.length_km = 0.1;
    Rng r1(77), r2(77), r3(77);
    const auto a = run_link(c, 2000000, r1);
    const auto b = run_link(c, 2000000, r2);
    RunOptions keep;
    keep.keep_slot_records = true;
    const auto k = run_link(c, 2000000, r3, keep);
    CHECK(a.sifted.alice_bits == b.sifted.alice_bits);
    CHECK(a.sifted.bob_bits == b.sifted.bob_bits);
    CHECK(a.sifted.slot_indices == k.sifted.slot_indices);
    CHECK(a.sifted.bob_bits == k.sifted.bob_bits);
    CHECK(a.summary.qber == k.summary.qber);
    CHECK(a.summary.detected_rate_total_cps == b.summary.detected_rate_total_cps);

    REQUIRE_FALSE(k.slots.empty());
    for (std::size_t i = 0; i < k.slots.size(); ++i) {
        CHECK(k.slots[i].photons_arrived <= k.slots[i].photons_emitted);
        if (i) CHECK(k.slots[i].slot_index > k.slots[i - 1].slot_index);
    }
    for (std::size_t i = 1; i < a.sifted.size(); ++i) CHECK(a.sifted.slot_indices[i] > a.sifted.slot_indices[i - 1]);
    CHECK(a.summary.sift_rate_bps <= a.summary.clock_hz);
    CHECK(a.summary.net_rate_bps >= 0.0);
}

TEST_CASE("misassigned detections are wrong half of the time") {
    LinkConfig c;
    c.channel.length_km = 0.1;
    c.detector = DetectorProfile::standard();
    c.detector.dark_cps = 0.0;
    Rng rng(5);
    RunOptions keep;
    keep.keep_slot_records = true;
    const auto r = run_link(c, 20000000, rng, keep);
    std::int64_t mis = 0, mis_err = 0, own = 0, own_err = 0;
    for (const auto& slot : r.slots) {
        int accepted = 0;
        for (const auto& d : slot.detections) accepted += d.accepted_by_gate;
        if (accepted != 1) continue;
        for (const auto& d : slot.detections) {
            if (!d.accepted_by_gate) continue;
            const bool err = d.detector_id != slot.alice_bit;
            if (d.emitted_slot == slot.slot_index) {
                ++own;
                own_err += err;
            } else {
                ++mis;
                mis_err += err;
            }
        }
    }
    REQUIRE(mis > 2000);
    CHECK(own_err == 0);
    const double frac = static_cast<double>(mis_err) / static_cast<double>(mis);
    CHECK(std::abs(frac - 0.5) <= 4.0 * std::sqrt(0.25 / static_cast<double>(mis)));
    CHECK(own + mis == r.summary.sifted_bits);
}

TEST_CASE("QBER is monotone in jitter, dark rate and clock") {
    LinkConfig base;
    base.channel.length_km = 2.0;
    const std::int64_t n = 40000000;

    SUBCASE("detector FWHM") {
        RunSummary prev{};
        for (double w : {300.0, 500.0, 700.0}) {
            auto c = base;
            c.detector.jitter_table = {{1e3, w}, {2e6, w}};
            const auto s = run(c, n, 11);
            if (prev.qber) CHECK(not_above(prev, s));
            prev = s;
        }
    }
    SUBCASE("dark counts") {
        RunSummary prev{};
        for (double dark : {0.0, 2e4, 1e5}) {
            auto c = base;
            c.detector.dark_cps = dark;
            const auto s = run(c, n, 12);
            if (prev.qber) CHECK(not_above(prev, s));
            prev = s;
        }
    }
    SUBCASE("clock") {
        RunSummary prev{};
        for (double clock : {1e9, 1.5e9, 2e9}) {
            auto c = base;
            c.source.clock_hz = clock;
            const auto s = run(c, n, 13);
            if (prev.qber) CHECK(not_above(prev, s));
            prev = s;
        }
    }
}

TEST_CASE("narrowing the gate trades sift rate for QBER") {
    LinkConfig base;
    base.channel.length_km = 2.0;
    base.detector = DetectorProfile::standard();
    RunSummary prev{};
    for (double g : {1.0, 0.7, 0.4}) {
        auto c = base;
        c.gate.gate_fraction = g;
        const auto s = run(c, 40000000, 21);
        if (prev.qber) {
            CHECK(not_above(s, prev));
            CHECK(s.sift_rate_bps <= prev.sift_rate_bps);
        }
        prev = s;
    }
}

TEST_CASE("standard module: short fibre raises QBER through rate-induced broadening") {
    LinkConfig c;
    c.detector = DetectorProfile::standard();
    c.channel.length_km = 0.1;
    CHECK(analytic_rates(c).detected_per_arm_cps > 5e5);
    const auto near = run(c, slots_for_sifted_bits(c, 2e5), 31);
    c.channel.length_km = 2.0;
    const auto far = run(c, slots_for_sifted_bits(c, 2e5), 32);
    CHECK(*near.qber > *far.qber + 3.0 * std::hypot(near.statistical_error_qber, far.statistical_error_qber));
}

TEST_CASE("Monte Carlo agrees with the analytic QBER at a default point") {
    LinkConfig c;
    c.channel.length_km = 0.1;
    const auto s = run(c, 20000000, 41);
    const double q = *analytic_qber(c);
    CHECK(std::abs(*s.qber - q) <= std::max(0.02, 3.0 * s.statistical_error_qber));
    CHECK(s.detected_rate_total_cps == doctest::Approx(analytic_rates(c).detected_total_cps).epsilon(0.01));
    CHECK(s.sift_rate_bps == doctest::Approx(analytic_rates(c).sift_rate_bps).epsilon(0.02));
}
