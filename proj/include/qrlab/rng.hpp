#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace qrlab {

/// Purposes that get their own random stream, so that e.g. changing the
/// batching of an optimizer never perturbs the data a seed generates.
enum class Stream : std::uint64_t {
  kData = 1,
  kTruth = 2,
  kSplit = 3,
  kBatch = 4,
  kPseudoLabel = 5,
  kMonteCarlo = 6,
  kSubsample = 7,
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Hashes (seed, stream, path...) into a 64-bit engine seed.
std::uint64_t derive_seed(std::uint64_t seed, Stream stream,
                          std::initializer_list<std::uint64_t> path = {});

/// Seeded engine plus the distributions the library draws from.
class Rng {
 public:
  explicit Rng(std::uint64_t engine_seed) : engine_(engine_seed) {}
  Rng(std::uint64_t seed, Stream stream, std::initializer_list<std::uint64_t> path = {})
      : engine_(derive_seed(seed, stream, path)) {}

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace qrlab
