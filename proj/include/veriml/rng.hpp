#pragma once

#include <cstdint>
#include <utility>

namespace veriml {

/// splitmix64 state. Stepping is a pure function of the state, so two
/// generators built from the same seed produce the same sequence.
struct Rng64 {
  std::uint64_t state = 0;

  friend bool operator==(const Rng64&, const Rng64&) = default;
};

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::pair<std::uint64_t, Rng64> rng_next(Rng64 rng) {
  const std::uint64_t s = rng.state + kGoldenGamma;
  return {mix64(s), Rng64{s}};
}

/// Top 53 bits over 2^53: uniform on [0, 1).
constexpr std::pair<double, Rng64> rng_uniform(Rng64 rng) {
  auto [v, next] = rng_next(rng);
  return {static_cast<double>(v >> 11) * 0x1.0p-53, next};
}

/// Independent child seed for stream `index` of `master`. Used for per-trial
/// and per-component seed splitting.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(master + kGoldenGamma * (index + 1)) ^ mix64(index ^ 0xD1B54A32D192ED03ULL);
}

/// Mutable convenience wrapper over the pure step functions.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : rng_{seed} {}
  explicit RngStream(Rng64 rng) : rng_(rng) {}

  std::uint64_t next() {
    auto [v, n] = rng_next(rng_);
    rng_ = n;
    return v;
  }

  double uniform() {
    auto [v, n] = rng_uniform(rng_);
    rng_ = n;
    return v;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Box-Muller; consumes two uniforms per call.
  double gaussian(double mean = 0.0, double sd = 1.0);

  /// Uniform integer in [0, bound) by rejection, bound > 0.
  std::uint64_t below(std::uint64_t bound);

  Rng64 state() const { return rng_; }

 private:
  Rng64 rng_;
};

}  // namespace veriml
