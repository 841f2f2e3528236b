#pragma once

// Counter-based random streams (Philox-4x32-10, Salmon et al. SC 2011).
// Each trajectory owns an independent stream keyed by (seed, stream id), so
// ensembles are bit-reproducible at any degree of parallelism.

#include <array>
#include <cstdint>

namespace metachan {

class PhiloxStream {
  public:
    PhiloxStream(std::uint64_t seed, std::uint64_t stream_id)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          counter_{0, 0, static_cast<std::uint32_t>(stream_id),
                   static_cast<std::uint32_t>(stream_id >> 32)} {}

    std::uint32_t next_u32() {
        if (pos_ == 4) {
            block_ = generate();
            advance_counter();
            pos_ = 0;
        }
        return block_[pos_++];
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double() {
        const std::uint64_t hi = next_u32() >> 5;   // 27 bits
        const std::uint64_t lo = next_u32() >> 6;   // 26 bits
        return double((hi << 26) | lo) * (1.0 / 9007199254740992.0);  // 2^-53
    }

  private:
    static constexpr std::uint32_t kWeylA = 0x9E3779B9u;
    static constexpr std::uint32_t kWeylB = 0xBB67AE85u;
    static constexpr std::uint32_t kMultA = 0xD2511F53u;
    static constexpr std::uint32_t kMultB = 0xCD9E8D57u;

    static void mul_hi_lo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                          std::uint32_t& lo) {
        const std::uint64_t p = std::uint64_t(a) * b;
        hi = static_cast<std::uint32_t>(p >> 32);
        lo = static_cast<std::uint32_t>(p);
    }

    std::array<std::uint32_t, 4> generate() const {
        std::array<std::uint32_t, 4> c = counter_;
        std::array<std::uint32_t, 2> k = key_;
        for (int round = 0; round < 10; ++round) {
            std::uint32_t hi0, lo0, hi1, lo1;
            mul_hi_lo(kMultA, c[0], hi0, lo0);
            mul_hi_lo(kMultB, c[2], hi1, lo1);
            c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
            k[0] += kWeylA;
            k[1] += kWeylB;
        }
        return c;
    }

    void advance_counter() {
        if (++counter_[0] == 0 && ++counter_[1] == 0) {
            // Counter words 2-3 hold the stream id and are never touched: a
            // single stream would need 2^64 blocks to collide with another.
        }
    }

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> counter_;
    std::array<std::uint32_t, 4> block_{};
    int pos_ = 4;
};

}  // namespace metachan
