#pragma once

#include <cstdint>

namespace ddreach {

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

/// SplitMix64 finalizer.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Counter-based random stream keyed by (seed, index).
///
/// The k-th output is a pure function of (seed, index, k), so streams for
/// different sample indices never interact and can be consumed in any order
/// or on any thread.
class RngStream {
 public:
  constexpr RngStream(std::uint64_t seed, std::uint64_t index) noexcept
      : seed_(seed), index_(index), key_(mix64(mix64(seed) + mix64(index ^ 0xD1B54A32D192ED03ULL))) {}

  [[nodiscard]] constexpr std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] constexpr std::uint64_t index() const noexcept { return index_; }
  [[nodiscard]] constexpr std::uint64_t position() const noexcept { return counter_; }

  constexpr std::uint64_t next_u64() noexcept { return mix64(key_ + (++counter_) * kGoldenGamma); }

  /// Uniform on [0, 1) with 53 random bits.
  constexpr double uniform01() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform on [lo, hi]; a degenerate interval returns lo exactly.
  constexpr double uniform(double lo, double hi) noexcept {
    const double u = uniform01();
    if (lo == hi) return lo;
    const double v = lo + (hi - lo) * u;
    return v > hi ? hi : v;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t index_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace ddreach
