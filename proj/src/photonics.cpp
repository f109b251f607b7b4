#include "b92sim/photonics.hpp"

#include <cmath>
#include <cstring>
#include <random>
#include <string>

#include "b92sim/errors.hpp"

namespace b92 {

void SourceSpec::validate() const {
    if (!(clock_hz > 0.0)) throw ConfigError("clock_hz must be > 0");
    if (!(mean_photon_number >= 0.0)) throw ConfigError("mean_photon_number must be >= 0");
    if (!(base_pulse_fwhm_ps > 0.0)) throw ConfigError("base_pulse_fwhm_ps must be > 0");
    if (!(emitter_bandwidth_hz > 0.0)) throw ConfigError("emitter_bandwidth_hz must be > 0");
    if (!(slot_ps() > base_pulse_fwhm_ps))
        throw ConfigError("base_pulse_fwhm_ps must be shorter than the slot period 1/clock_hz");
}

const char* to_string(ChannelMode mode) {
    return mode == ChannelMode::FullFiber ? "fiber" : "attenuator";
}

ChannelMode parse_channel_mode(const char* text) {
    if (std::strcmp(text, "fiber") == 0) return ChannelMode::FullFiber;
    if (std::strcmp(text, "attenuator") == 0) return ChannelMode::AttenuatorOnly;
    throw ConfigError(std::string("mode must be \"fiber\" or \"attenuator\", got \"") + text + "\"");
}

void ChannelSpec::validate() const {
    if (!(length_km >= 0.0)) throw ConfigError("length_km must be >= 0");
    if (!(atten_db_per_km >= 0.0)) throw ConfigError("atten_db_per_km must be >= 0");
    if (!(broadening_ps_per_km >= 0.0)) throw ConfigError("broadening_ps_per_km must be >= 0");
    if (!(excess_loss_db >= 0.0)) throw ConfigError("excess_loss_db must be >= 0");
}

double encode_bit(int bit) {
    switch (bit) {
    case 0: return 0.0;
    case 1: return 45.0;
    default: throw UsageError("encode_bit: bit must be 0 or 1");
    }
}

std::int64_t draw_photon_number(double mu, Rng& rng) {
    if (mu <= 0.0) return 0;
    return std::poisson_distribution<std::int64_t>(mu)(rng);
}

double emitter_pulse_fwhm(const SourceSpec& source) {
    const double r = source.clock_hz / source.emitter_bandwidth_hz;
    return source.base_pulse_fwhm_ps * std::sqrt(1.0 + r * r);
}

double channel_transmittance(const ChannelSpec& channel) {
    const double loss_db = channel.atten_db_per_km * channel.length_km + channel.excess_loss_db;
    return std::pow(10.0, -loss_db / 10.0);
}

double channel_broadening_fwhm(const ChannelSpec& channel) {
    if (channel.mode == ChannelMode::AttenuatorOnly) return 0.0;
    return channel.broadening_ps_per_km * channel.length_km;
}

PropagationResult propagate(const EmittedPulse& pulse, const ChannelSpec& channel, Rng& rng) {
    PropagationResult out;
    out.broadening_fwhm_ps = channel_broadening_fwhm(channel);
    if (pulse.photon_count > 0)
        out.surviving_photons = std::binomial_distribution<std::int64_t>(
            pulse.photon_count, channel_transmittance(channel))(rng);
    return out;
}

EmittedPulse make_pulse(std::int64_t slot, int bit, std::int64_t photons, const SourceSpec& source) {
    return EmittedPulse{slot, bit, encode_bit(bit), photons, emitter_pulse_fwhm(source)};
}

} // namespace b92
