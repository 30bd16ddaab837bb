#pragma once

#include <cstdint>

namespace odtr {

// Deterministic, platform-independent generator keyed by (seed, stream_id).
// xoshiro256++ state is derived from the key through SplitMix64, so distinct
// stream ids give decorrelated sequences and replications can run in parallel
// without sharing draw order.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed, std::uint64_t stream_id = 0) noexcept {
    std::uint64_t x = seed;
    std::uint64_t y = stream_id * 0x9e3779b97f4a7c15ull + 0x6a09e667f3bcc909ull;
    s_[0] = split_mix(x);
    s_[1] = split_mix(x) ^ split_mix(y);
    s_[2] = split_mix(y);
    s_[3] = split_mix(x) + split_mix(y);
    // all-zero state is invalid for xoshiro
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[3] = 1;
    seed_ = seed;
    stream_ = stream_id;
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_; }

  std::uint64_t next_u64() noexcept {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // uniform on the open interval (0,1); never returns an exact endpoint
  double uniform01() noexcept {
    const std::uint64_t bits = next_u64() >> 11;  // 53 bits
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform01();
  }

  // integer in [0, n)
  std::uint64_t uniform_index(std::uint64_t n) noexcept {
    // modulo bias is < 2^-53 for every n used here
    return next_u64() % n;
  }

 private:
  static std::uint64_t rotl(std::uint64_t v, int k) noexcept {
    return (v << k) | (v >> (64 - k));
  }
  static std::uint64_t split_mix(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t s_[4];
  std::uint64_t seed_ = 0;
  std::uint64_t stream_ = 0;
};

}  // namespace odtr
