#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>

namespace worg {

/// SplitMix64 pseudo-random generator (Steele, Lea & Flood 2014).
///
/// A counter-based generator: a 64-bit Weyl sequence passed through a
/// mixing finalizer. Chosen because the whole optimization is required to
/// be bit-reproducible from a single seed across platforms, which rules
/// out the standard library distributions. All stochastic draws in an
/// optimization run come from one instance, consumed sequentially.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 bits of precision.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Draw an index from a normalized weight row by CDF inversion.
  /// Consumes exactly one variate.
  std::size_t next_categorical(std::span<const double> weights) {
    if (weights.empty()) throw std::invalid_argument("categorical draw from empty weight row");
    const double u = next_unit();
    double cum = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      cum += weights[i];
      if (u < cum) return i;
    }
    return weights.size() - 1;  // guard against rounding in the final bin
  }

 private:
  std::uint64_t state_;
};

}  // namespace worg
