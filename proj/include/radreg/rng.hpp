#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace radreg {

// SplitMix64 mixing step. Used to derive independent per-trial seeds from a
// base seed so campaign trials can run in any order (or in parallel) and
// still reproduce bit-identically.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  return splitmix64(base ^ splitmix64(index + 0x9E3779B97F4A7C15ull));
}

// Deterministic random stream: mt19937_64 (engine fully specified by the
// standard) with explicit variate mappings. std::uniform_real_distribution
// and std::normal_distribution are implementation-defined, so they are not
// used anywhere; this keeps campaign outputs bit-identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via Box-Muller; consumes two uniforms per pair, caches
  // the second variate.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform01();  // (0, 1], log is safe
    const double u2 = uniform01();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * M_PI * u2;
    spare_ = mag * std::sin(ang);
    has_spare_ = true;
    return mag * std::cos(ang);
  }

  double normal(double mu, double sigma) { return mu + sigma * normal(); }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace radreg
