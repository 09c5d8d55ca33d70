#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace atsalign {

/// Portable seeded generator.
///
/// Stream: std::mt19937_64 seeded with the 64-bit seed (its output sequence
/// is fixed by the C++ standard). Derived draws avoid the
/// implementation-defined std distributions:
///   uniform()      = (next() >> 11) * 2^-53            in [0, 1)
///   index(n)       = next() % n, rejecting next() >= 2^64 - (2^64 mod n)
///   normal()       = Box-Muller on two uniform() draws, cosine branch only
/// Any implementation following these rules reproduces every sample.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::size_t index(std::size_t n) {
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound + 1) % bound;
    std::uint64_t x = engine_();
    while (x > limit) x = engine_();
    return static_cast<std::size_t>(x % bound);
  }

  double normal();

  bool coin() { return (engine_() >> 63) != 0; }

  /// Fisher-Yates, drawing index(i + 1) for i = n-1 down to 1.
  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = index(i);
      std::swap(items[i - 1], items[j]);
    }
  }

  /// Derives an independent child seed; used to give sub-tasks their own streams.
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t salt);

 private:
  std::mt19937_64 engine_;
};

}  // namespace atsalign
