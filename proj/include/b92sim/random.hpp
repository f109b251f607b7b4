#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace b92 {

/// Random stream used throughout the simulator. Every stochastic operation
/// takes one of these explicitly; nothing draws from global state.
using Rng = std::mt19937_64;

constexpr double kFwhmPerSigma = 2.354820045030949;   // 2*sqrt(2 ln 2)

constexpr double fwhm_to_sigma(double fwhm) { return fwhm / kFwhmPerSigma; }

/// SplitMix64 finalizer; a good 64-bit bijective mixer.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) {
    return mix64(seed ^ mix64(value));
}

/// FNV-1a, for folding names into seeds.
constexpr std::uint64_t hash_string(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t hash_double(double v);

/// Uniform on [0, 1) with 53 bits of resolution.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double gaussian(Rng& rng, double sigma) {
    if (sigma <= 0.0) return 0.0;
    return std::normal_distribution<double>(0.0, sigma)(rng);
}

/// Poisson(mean) conditioned on the outcome being at least one.
/// Inversion on the truncated pmf; cheap for the small means used here.
std::int64_t zero_truncated_poisson(double mean, Rng& rng);

} // namespace b92
