#include "b92sim/random.hpp"

#include <bit>
#include <random>

namespace b92 {

std::uint64_t hash_double(double v) {
    if (v == 0.0) v = 0.0;   // fold -0.0
    return mix64(std::bit_cast<std::uint64_t>(v));
}

std::int64_t zero_truncated_poisson(double mean, Rng& rng) {
    if (mean > 8.0) {
        std::poisson_distribution<std::int64_t> dist(mean);
        for (;;) {
            const auto n = dist(rng);
            if (n > 0) return n;
        }
    }
    // P(n) / P(n >= 1) = e^-m m^n / n! / (1 - e^-m)
    const double norm = -std::expm1(-mean);
    double u = uniform01(rng) * norm;
    double p = std::exp(-mean) * mean;   // pmf at n = 1
    std::int64_t n = 1;
    while (u > p && n < 1000) {
        u -= p;
        ++n;
        p *= mean / static_cast<double>(n);
    }
    return n;
}

} // namespace b92
