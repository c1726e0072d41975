#pragma once

#include <cstdint>

namespace sepgd {

/// Counter-based splittable PRNG (SplitMix64 core).
///
/// Streams are identified by a 64-bit key; the generator walks the key
/// forward by the golden-ratio increment and finalizes with the SplitMix64
/// mixer. Keys derived from (seed, index...) give independent, reproducible
/// streams regardless of the order in which they are consumed, which is what
/// the parallel sweep runner relies on.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t key) : state_(key) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). Multiply-shift mapping; the bias is of order
  /// n / 2^64 and irrelevant at the sample sizes used here.
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Fold any number of 64-bit parts into a stream key.
inline std::uint64_t derive_key(std::uint64_t seed) { return SplitMix64::mix(seed + 0x9E3779B97F4A7C15ULL); }

template <typename... Rest>
std::uint64_t derive_key(std::uint64_t seed, std::uint64_t part, Rest... rest) {
  return derive_key(SplitMix64::mix(seed ^ (part + 0x9E3779B97F4A7C15ULL)), rest...);
}

}  // namespace sepgd
