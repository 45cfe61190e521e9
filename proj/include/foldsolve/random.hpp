#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>

namespace foldsolve {

/// Counter-based 64-bit generator: the i-th output of stream (seed, stream_id)
/// is splitmix64(key + i * golden) with key = splitmix64(seed ^ splitmix64(stream_id)).
///
/// Any (seed, stream_id) pair gives an independent, reproducible sequence, so
/// trials and components can draw in parallel without sharing state.
/// Satisfies UniformRandomBitGenerator.
class CounterRng {
public:
  using result_type = std::uint64_t;

  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

  CounterRng(std::uint64_t seed, std::uint64_t stream_id)
      : key_(mix(seed ^ mix(stream_id + kGolden))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix(key_ + (++counter_) * kGolden); }

  std::uint64_t counter() const { return counter_; }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound), rejection sampled.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = max() - max() % bound;
    std::uint64_t x;
    do {
      x = (*this)();
    } while (x >= limit);
    return x % bound;
  }

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Stream ids: one per (trial, component) pair.
enum class Component : std::uint64_t {
  matrix = 1,
  row_selection = 2,
  signal = 3,
  pre_noise = 4,
  post_noise = 5,
};

inline std::uint64_t stream_id(std::uint64_t trial, Component c) {
  return trial * 64 + static_cast<std::uint64_t>(c);
}

/// 64-bit FNV-1a, chainable through `state`.
inline std::uint64_t fnv1a(const void *data, std::size_t len,
                           std::uint64_t state = 0xCBF29CE484222325ULL) {
  const auto *bytes = static_cast<const unsigned char *>(data);
  for (std::size_t i = 0; i < len; ++i) {
    state ^= bytes[i];
    state *= 0x100000001B3ULL;
  }
  return state;
}

} // namespace foldsolve
