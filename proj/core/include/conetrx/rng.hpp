#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace conetrx {

/// Deterministic random source. The engine is the standard-specified
/// mt19937_64 and every distribution is derived from raw 64-bit draws by
/// hand (uniform bit shift, Box-Muller), so streams are bit-reproducible
/// across platforms and standard-library versions.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(splitmix64(seed)) {}

  uint64_t next_u64() { return eng_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi] via rejection-free modulo of a wide draw.
  int uniform_int(int lo, int hi) {
    uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(eng_() % span);
  }

  bool bit() { return (eng_() >> 63) != 0; }

  /// Standard normal via Box-Muller; both uniforms are consumed every call.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  /// Circularly symmetric complex Gaussian with E|z|^2 = variance.
  std::complex<double> cnormal(double variance) {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double r = std::sqrt(-std::log(u1) * variance);
    double th = 2.0 * kPi * u2;
    return {r * std::cos(th), r * std::sin(th)};
  }

  /// Derives an independent stream seed from a master seed and an index.
  /// Used so that sample i of a dataset is reproducible in isolation and
  /// generation order does not matter.
  static uint64_t derive(uint64_t master, uint64_t index) {
    return splitmix64(master ^ splitmix64(index + 0x9E3779B97F4A7C15ull));
  }

  static constexpr double kPi = 3.141592653589793238462643383279502884;

 private:
  static uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
  }

  std::mt19937_64 eng_;
};

}  // namespace conetrx
