#pragma once

#include <cstdint>
#include <random>

namespace tfqkd {

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Hierarchical counter-based stream key. Appending path components with
// with() derives a child key, so every (seed, purpose, trial, cell, slot)
// tuple owns an independent stream no matter in which order, or on which
// worker, the sampling happens.
class StreamKey {
 public:
  explicit constexpr StreamKey(std::uint64_t seed) : state_(mix64(seed)) {}

  [[nodiscard]] constexpr StreamKey with(std::uint64_t component) const {
    StreamKey child = *this;
    child.state_ = mix64(child.state_ ^ mix64(component + 0x243f6a8885a308d3ULL));
    return child;
  }

  [[nodiscard]] constexpr std::uint64_t value() const { return state_; }

 private:
  std::uint64_t state_;
};

enum class StreamPurpose : std::uint64_t {
  kTrialDrift = 1,
  kCounts = 2,
  kDetectResample = 3,
  kTheorySigma = 4,
  kCalibration = 5,
  kTest = 6,
};

inline constexpr StreamKey purpose_key(std::uint64_t seed, StreamPurpose purpose) {
  return StreamKey(seed).with(static_cast<std::uint64_t>(purpose));
}

// One random stream. Cheap to construct; make one per sampling site instead
// of sharing streams between sites.
class RngStream {
 public:
  explicit RngStream(StreamKey key) : engine_(key.value()) {}

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

  double gaussian(double sigma) {
    if (sigma <= 0.0) {
      return 0.0;
    }
    return std::normal_distribution<double>(0.0, sigma)(engine_);
  }

  long long poisson(double mean) {
    if (mean <= 0.0) {
      return 0;
    }
    return std::poisson_distribution<long long>(mean)(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace tfqkd
