#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace mipvu {

/// Portable 64-bit linear congruential generator (Knuth's MMIX constants).
/// Part of the split-manifest format contract: any implementation that
/// follows the same three steps reproduces identical shuffles.
///   state_0     = (uint64) seed
///   state_{k+1} = state_k * 6364136223846793005 + 1442695040888963407 (mod 2^64)
///   draw_k      = state_{k+1} >> 32
class Lcg64 {
 public:
  static constexpr std::uint64_t kMultiplier = 6364136223846793005ULL;
  static constexpr std::uint64_t kIncrement = 1442695040888963407ULL;

  explicit Lcg64(std::uint64_t seed) : state_(seed) {}

  std::uint32_t next() {
    state_ = state_ * kMultiplier + kIncrement;
    return static_cast<std::uint32_t>(state_ >> 32);
  }

  /// Uniform-ish integer in [0, bound) by modulo reduction (bound > 0).
  std::uint32_t below(std::uint32_t bound) { return next() % bound; }

  double unit() { return static_cast<double>(next()) / 4294967296.0; }

 private:
  std::uint64_t state_;
};

/// Fisher-Yates from the back: for i = n-1 down to 1, swap(i, draw % (i+1)).
template <typename T>
void seeded_shuffle(std::vector<T>& items, std::uint64_t seed) {
  Lcg64 rng(seed);
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = rng.below(static_cast<std::uint32_t>(i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace mipvu
