#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace cfmimo {

/// Labeled random sub-streams. Each physical noise source draws from its own
/// stream so any one of them can be silenced without shifting the others.
enum class Stream : std::uint64_t {
  kPlacement = 1,
  kShadowing = 2,
  kChannel = 3,
  kTxDistortion = 4,
  kRxDistortion = 5,
  kNoise = 6,
  kQuantization = 7,
  kSymbols = 8,
  kGeometry = 9,
};

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of sub-stream `stream` of batch `index` under `master`.
constexpr std::uint64_t derive_seed(std::uint64_t master, Stream stream,
                                    std::uint64_t index = 0) {
  return mix64(mix64(mix64(master) ^ static_cast<std::uint64_t>(stream)) + index);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t master, Stream stream, std::uint64_t index = 0)
      : engine_(derive_seed(master, stream, index)) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double normal() { return normal_(engine_); }

  /// Circularly-symmetric complex normal with E|x|^2 = variance.
  std::complex<double> cn(double variance) {
    if (variance <= 0) return {0.0, 0.0};
    const double s = std::sqrt(variance / 2.0);
    const double re = normal_(engine_);
    const double im = normal_(engine_);
    return {s * re, s * im};
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace cfmimo
