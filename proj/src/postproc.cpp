#include "b92sim/postproc.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "b92sim/errors.hpp"

namespace b92 {

void SecurityParams::validate() const {
    if (!(qber_secure_threshold > 0.0 && qber_secure_threshold < 0.5))
        throw ConfigError("qber_secure_threshold must be in (0,0.5)");
    if (!(ec_inefficiency_f >= 1.0)) throw ConfigError("ec_inefficiency_f must be >= 1");
}

double binary_entropy(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw UsageError("binary_entropy: p must be in [0,1]");
    if (p == 0.0 || p == 1.0) return 0.0;
    return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

double secret_fraction(double qber, const SecurityParams& params) {
    if (qber >= params.qber_secure_threshold) return 0.0;
    const double h = binary_entropy(qber);
    return std::max(0.0, 1.0 - params.ec_inefficiency_f * h - h);
}

double net_rate(double sift_rate_bps, double qber, const SecurityParams& params) {
    return sift_rate_bps * secret_fraction(qber, params);
}

namespace {

class Cascade {
public:
    Cascade(const BitString& alice, BitString& bob, std::int64_t& leaked)
        : alice_(alice), bob_(bob), leaked_(leaked) {}

    void add_pass(std::vector<std::size_t> order, std::size_t block_size) {
        Pass pass;
        pass.order = std::move(order);
        pass.block_size = block_size;
        pass.block_of.resize(pass.order.size());
        for (std::size_t k = 0; k < pass.order.size(); ++k) pass.block_of[pass.order[k]] = k / block_size;
        const std::size_t blocks = (pass.order.size() + block_size - 1) / block_size;
        pass.odd.assign(blocks, 0);
        passes_.push_back(std::move(pass));

        auto& p = passes_.back();
        const std::size_t pi = passes_.size() - 1;
        for (std::size_t b = 0; b < blocks; ++b) {
            const auto [lo, hi] = range(p, b);
            ++leaked_;   // Alice announces the block parity
            p.odd[b] = parity(alice_, p, lo, hi) ^ parity(bob_, p, lo, hi);
            if (p.odd[b]) queue_.push_back({pi, b});
        }
        drain();
    }

    std::int64_t corrections() const { return corrections_; }

private:
    struct Pass {
        std::vector<std::size_t> order;
        std::vector<std::size_t> block_of;
        std::vector<std::uint8_t> odd;
        std::size_t block_size = 0;
    };
    struct BlockRef {
        std::size_t pass;
        std::size_t block;
    };

    static std::pair<std::size_t, std::size_t> range(const Pass& p, std::size_t b) {
        return {b * p.block_size, std::min(p.order.size(), (b + 1) * p.block_size)};
    }

    static std::uint8_t parity(const BitString& key, const Pass& p, std::size_t lo, std::size_t hi) {
        std::uint8_t s = 0;
        for (std::size_t k = lo; k < hi; ++k) s ^= key[p.order[k]];
        return s;
    }

    void drain() {
        while (!queue_.empty()) {
            const auto ref = queue_.back();
            queue_.pop_back();
            auto& p = passes_[ref.pass];
            if (!p.odd[ref.block]) continue;
            auto [lo, hi] = range(p, ref.block);
            while (hi - lo > 1) {
                const std::size_t mid = lo + (hi - lo) / 2;
                ++leaked_;   // parity of the left half
                if (parity(alice_, p, lo, mid) != parity(bob_, p, lo, mid))
                    hi = mid;
                else
                    lo = mid;
            }
            flip(p.order[lo]);
        }
    }

    void flip(std::size_t bit) {
        bob_[bit] ^= 1U;
        ++corrections_;
        for (std::size_t pi = 0; pi < passes_.size(); ++pi) {
            auto& p = passes_[pi];
            const std::size_t b = p.block_of[bit];
            p.odd[b] ^= 1U;
            if (p.odd[b]) queue_.push_back({pi, b});
        }
    }

    const BitString& alice_;
    BitString& bob_;
    std::int64_t& leaked_;
    std::int64_t corrections_ = 0;
    std::vector<Pass> passes_;
    std::vector<BlockRef> queue_;
};

} // namespace

ReconciliationResult reconcile(const BitString& alice_key, const BitString& bob_key,
                               double qber_estimate, Rng& rng) {
    if (alice_key.size() != bob_key.size()) throw UsageError("reconcile: key length mismatch");
    if (!(qber_estimate > 0.0 && qber_estimate < 0.5)) throw UsageError("reconcile: qber_estimate must be in (0,0.5)");

    constexpr int kPasses = 4;
    ReconciliationResult out;
    out.bob_key = bob_key;
    out.report.corrected_key_len = static_cast<std::int64_t>(bob_key.size());
    const std::size_t n = bob_key.size();
    if (n == 0) return out;

    Cascade cascade(alice_key, out.bob_key, out.report.parity_bits_leaked);
    std::size_t block = std::max<std::size_t>(2, static_cast<std::size_t>(std::lround(0.73 / qber_estimate)));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (int pass = 0; pass < kPasses; ++pass) {
        if (pass > 0) std::shuffle(order.begin(), order.end(), rng);
        cascade.add_pass(order, std::min(block, n));
        block *= 2;
        ++out.report.passes;
    }
    out.report.corrections = cascade.corrections();
    for (std::size_t i = 0; i < n; ++i) out.report.residual_errors += alice_key[i] != out.bob_key[i];
    return out;
}

BitString privacy_amplify(const BitString& key, std::uint64_t seed, std::size_t output_len) {
    const std::size_t n = key.size();
    if (output_len > n) throw UsageError("privacy_amplify: output_len exceeds key length");
    BitString out(output_len, 0);
    if (output_len == 0) return out;

    // Row i of the Toeplitz matrix is r[i .. i+n) against the reversed key, so
    // T[i][j] = r[i - j + n - 1] depends only on i - j.
    const std::size_t words = (n + 63) / 64;
    std::vector<std::uint64_t> reversed(words, 0);
    for (std::size_t j = 0; j < n; ++j)
        if (key[n - 1 - j]) reversed[j / 64] |= std::uint64_t{1} << (j % 64);

    const std::size_t r_bits = n + output_len - 1;
    std::vector<std::uint64_t> r((r_bits + 63) / 64 + 2, 0);
    Rng rng(seed);
    for (std::size_t w = 0; w * 64 < r_bits; ++w) r[w] = rng();
    if (r_bits % 64) r[r_bits / 64] &= (std::uint64_t{1} << (r_bits % 64)) - 1;

    for (std::size_t i = 0; i < output_len; ++i) {
        const std::size_t base = i / 64, shift = i % 64;
        std::uint64_t acc = 0;
        for (std::size_t w = 0; w < words; ++w) {
            std::uint64_t window = r[base + w] >> shift;
            if (shift) window |= r[base + w + 1] << (64 - shift);
            acc ^= window & reversed[w];
        }
        out[i] = static_cast<std::uint8_t>(std::popcount(acc) & 1);
    }
    return out;
}

std::size_t final_key_length(std::size_t n, double qber, std::int64_t leaked_bits, const SecurityParams& params) {
    const double nd = static_cast<double>(n);
    const double estimate = nd * secret_fraction(qber, params);
    const double measured = nd * (1.0 - binary_entropy(qber)) - static_cast<double>(leaked_bits);
    const double len = std::floor(std::min(estimate, measured));
    return len > 0.0 ? static_cast<std::size_t>(len) : 0;
}

std::string to_hex(const BitString& bits) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string s;
    s.reserve((bits.size() + 3) / 4);
    for (std::size_t i = 0; i < bits.size(); i += 4) {
        unsigned nibble = 0;
        for (std::size_t k = 0; k < 4; ++k) nibble = (nibble << 1) | (i + k < bits.size() ? bits[i + k] : 0U);
        s.push_back(kDigits[nibble]);
    }
    return s;
}

} // namespace b92
