#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace manta {

// Seeded random stream. All randomness in the pipeline flows through an
// explicit Rng instance; there is no ambient/global generator. The
// double-precision draws are derived from raw 64-bit output so the stream is
// reproducible across standard libraries, not just across runs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform in [lo, hi); returns lo for a degenerate interval.
  double uniform(double lo, double hi) {
    if (lo > hi) throw std::invalid_argument("Rng::uniform: lo > hi");
    return lo + (hi - lo) * uniform();
  }

  // Standard normal via Box-Muller. Uncached: one draw consumes two uniforms,
  // which keeps the stream position independent of caller history.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Uniform integer in [0, n). Modulo bias is negligible for the small n used
  // here (n << 2^32).
  std::uint64_t uniform_int(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::uniform_int: n == 0");
    return next_u64() % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace manta
