#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace ccm {

// Counter-based PRNG (Philox4x32-10). Every (seed, stream) pair yields an
// independent sequence, so parallel consumers can each own a stream and
// produce results that do not depend on scheduling. The generator is part of
// the reproducibility contract: changing it changes every seeded result.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}

  // Packs a purpose tag, a replicate index, and a sub-index into one stream id.
  // Layout: purpose in the top byte, replicate in the next 32 bits, sub below.
  static std::uint64_t stream_id(std::uint32_t purpose, std::uint64_t replicate = 0,
                                 std::uint64_t sub = 0) {
    return (static_cast<std::uint64_t>(purpose & 0xff) << 56) |
           ((replicate & 0xffffffffULL) << 24) | (sub & 0xffffffULL);
  }

  std::uint32_t next_u32() {
    if (pos_ == 4) refill();
    return block_[pos_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  // Uniform double in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Normal draw parameterized by VARIANCE. A zero-variance spec is a point
  // mass and consumes no randomness, so degenerate configs leave the draw
  // sequence of the remaining parameters unchanged.
  double normal(double mean, double var) {
    if (var == 0.0) return mean;
    return mean + std::sqrt(var) * standard_normal();
  }

  double standard_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // Box-Muller; u1 is kept strictly positive so log() stays finite.
    const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // Uniform integer in [0, n), n >= 1. Multiply-shift map keeps it fast and
  // deterministic; the O(n / 2^64) bias is irrelevant at resampling scales.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // One 128-bit Philox block for a given counter, exposed for seed derivation.
  std::array<std::uint32_t, 4> block_at(std::uint64_t counter) const {
    return encrypt({static_cast<std::uint32_t>(counter),
                    static_cast<std::uint32_t>(counter >> 32),
                    static_cast<std::uint32_t>(stream_),
                    static_cast<std::uint32_t>(stream_ >> 32)});
  }

 private:
  static void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                      std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
  }

  std::array<std::uint32_t, 4> encrypt(std::array<std::uint32_t, 4> ctr) const {
    std::array<std::uint32_t, 2> key = key_;
    round(ctr, key);
    for (int i = 1; i < 10; ++i) {
      key[0] += 0x9E3779B9u;
      key[1] += 0xBB67AE85u;
      round(ctr, key);
    }
    return ctr;
  }

  static void round(std::array<std::uint32_t, 4>& ctr,
                    const std::array<std::uint32_t, 2>& key) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(0xD2511F53u, ctr[0], hi0, lo0);
    mulhilo(0xCD9E8D57u, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }

  void refill() {
    block_ = block_at(counter_);
    ++counter_;
    pos_ = 0;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int pos_ = 4;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

// Stream purposes, kept in one place so independent analyses never collide.
namespace stream_purpose {
constexpr std::uint32_t resample = 1;       // bootstrap resampling
constexpr std::uint32_t gate1 = 2;          // denominator gate, first estimand
constexpr std::uint32_t gate2 = 3;          // denominator gate, second estimand
constexpr std::uint32_t interaction = 4;    // interaction test calibration
constexpr std::uint32_t generate = 5;       // simulated dataset generation
constexpr std::uint32_t derive = 6;         // per-replicate seed derivation
constexpr std::uint32_t truth = 7;          // brute-force estimand evaluation
constexpr std::uint32_t entropy_mix = 8;    // miscellaneous
}  // namespace stream_purpose

// Derives an independent 64-bit seed for replicate r of a master-seeded run.
inline std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t r) {
  CounterRng rng(master_seed, CounterRng::stream_id(stream_purpose::derive, r));
  return rng.next_u64();
}

}  // namespace ccm
