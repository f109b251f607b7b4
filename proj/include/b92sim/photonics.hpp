#pragma once

// Alice's attenuated polarization-encoded source and the fiber channel.

#include <cstdint>

#include "b92sim/random.hpp"

namespace b92 {

struct SourceSpec {
    double clock_hz = 2e9;
    double mean_photon_number = 0.1;
    double wavelength_nm = 850.0;        // informational
    double sync_wavelength_nm = 1300.0;  // informational
    double base_pulse_fwhm_ps = 80.0;
    double emitter_bandwidth_hz = 5e9;   // laser + driver 3 dB bandwidth
    /// Exactly one photon per pulse instead of Poisson(mean_photon_number).
    /// An idealised source for protocol checks.
    bool single_photon = false;

    double slot_ps() const { return 1e12 / clock_hz; }

    /// Throws ConfigError naming the first violated field.
    void validate() const;
};

enum class ChannelMode { FullFiber, AttenuatorOnly };

const char* to_string(ChannelMode mode);
ChannelMode parse_channel_mode(const char* text);

struct ChannelSpec {
    double length_km = 6.55;
    double atten_db_per_km = 2.2;
    double broadening_ps_per_km = 30.0;
    ChannelMode mode = ChannelMode::FullFiber;
    /// Fixed insertion loss: receiver optics, fiber coupling at 850 nm.
    double excess_loss_db = 12.5;

    void validate() const;
};

struct EmittedPulse {
    std::int64_t slot_index = 0;
    int bit = 0;
    double pol_angle_deg = 0.0;
    std::int64_t photon_count = 0;
    double pulse_fwhm_ps = 0.0;
};

struct PropagationResult {
    std::int64_t surviving_photons = 0;
    double broadening_fwhm_ps = 0.0;
};

/// 0 -> 0 deg, 1 -> 45 deg. Throws UsageError for any other value.
double encode_bit(int bit);

/// Poisson photon number of one attenuated-laser pulse.
std::int64_t draw_photon_number(double mu, Rng& rng);

/// Emitted pulse width including bandwidth-limited broadening:
/// base * sqrt(1 + (clock / bandwidth)^2).
double emitter_pulse_fwhm(const SourceSpec& source);

/// Beer-Lambert power transmittance of fiber plus fixed excess loss.
double channel_transmittance(const ChannelSpec& channel);

/// Dispersion broadening contributed by the channel; exactly zero when the
/// loss is simulated with an attenuator.
double channel_broadening_fwhm(const ChannelSpec& channel);

/// Independent per-photon survival through the channel.
PropagationResult propagate(const EmittedPulse& pulse, const ChannelSpec& channel, Rng& rng);

/// Builds one slot's pulse: random-free given the bit and photon count.
EmittedPulse make_pulse(std::int64_t slot, int bit, std::int64_t photons, const SourceSpec& source);

} // namespace b92
