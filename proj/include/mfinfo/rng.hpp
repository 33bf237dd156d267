#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace mfinfo {

/// Stream tags mixed into derived seeds so every consumer draws from its own
/// reproducible stream, independent of evaluation order.
enum class Stream : std::uint64_t {
  weights = 1,
  biases = 2,
  inputs = 3,
  cell = 4,
  trial = 5,
  repetition = 6,
  correlation = 7,
  instance = 8,
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Hashes a root seed with a sequence of stream tags and indices.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept;

inline std::uint64_t derive_seed(std::uint64_t seed, Stream stream, std::uint64_t index = 0) noexcept {
  return derive_seed(seed, {static_cast<std::uint64_t>(stream), index});
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}

  double gaussian() { return normal_(engine_); }
  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace mfinfo
