#pragma once

// Counter-based 64-bit generator (SplitMix64 finalizer applied to a Weyl
// counter) and the stream-splitting rule used for batched Monte Carlo.
//
//   output_k       = mix64(seed + (k + 1) * 0x9E3779B97F4A7C15)
//   stream(seed,i) = mix64(seed ^ mix64((i + 1) * 0xD1B54A32D192ED03))
//
// Streams with distinct i are statistically independent; a given (seed, i)
// always reproduces the same sequence on the same build.

#include <cstdint>
#include <limits>

namespace bvmlab {

inline constexpr const char* kGeneratorName = "splitmix64-counter";

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(master ^ mix64((index + 1) * 0xD1B54A32D192ED03ULL));
}

class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr CounterRng(std::uint64_t seed = 0) : seed_(seed) {}
  constexpr CounterRng(std::uint64_t master, std::uint64_t stream) : seed_(stream_seed(master, stream)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() {
    ++counter_;
    return mix64(seed_ + counter_ * 0x9E3779B97F4A7C15ULL);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  constexpr double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  constexpr std::uint64_t seed() const { return seed_; }
  constexpr std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace bvmlab
