#pragma once

// Classical post-processing: secure-rate estimate, Cascade reconciliation and
// Toeplitz privacy amplification.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "b92sim/random.hpp"

namespace b92 {

/// One bit per element, each 0 or 1.
using BitString = std::vector<std::uint8_t>;

struct SecurityParams {
    double qber_secure_threshold = 0.10;
    double ec_inefficiency_f = 1.16;

    void validate() const;
};

struct ReconciliationReport {
    int passes = 0;
    std::int64_t parity_bits_leaked = 0;
    std::int64_t residual_errors = 0;
    std::int64_t corrected_key_len = 0;
    std::int64_t corrections = 0;
};

struct ReconciliationResult {
    BitString bob_key;
    ReconciliationReport report;
};

/// Shannon binary entropy in bits. Throws UsageError outside [0,1].
double binary_entropy(double p);

/// sift_rate * max(0, 1 - f*h(q) - h(q)); zero at or above the security threshold.
double net_rate(double sift_rate_bps, double qber, const SecurityParams& params);

/// Fraction of sifted bits that survive error correction and privacy amplification.
double secret_fraction(double qber, const SecurityParams& params);

/// Cascade-style reconciliation of Bob's key against Alice's.
///
/// Four passes; pass 1 uses blocks of ~0.73/qber_estimate bits, each further
/// pass doubles the block size over a fresh random permutation. Every odd
/// parity triggers a binary search, and each corrected bit is traced back
/// through earlier passes (the cascade step). Every parity disclosed on the
/// public channel is counted in parity_bits_leaked. residual_errors compares
/// the corrected key against Alice's and is available only because both keys
/// live in-process.
ReconciliationResult reconcile(const BitString& alice_key, const BitString& bob_key,
                               double qber_estimate, Rng& rng);

/// Multiplies the key by a seeded random Toeplitz matrix over GF(2).
/// Throws UsageError when output_len exceeds the key length.
BitString privacy_amplify(const BitString& key, std::uint64_t seed, std::size_t output_len);

/// Final key length for an n-bit reconciled key: n * secret_fraction(q),
/// reduced further when the measured leakage exceeds the f*h(q)*n estimate.
std::size_t final_key_length(std::size_t n, double qber, std::int64_t leaked_bits,
                             const SecurityParams& params);

std::string to_hex(const BitString& bits);

} // namespace b92
