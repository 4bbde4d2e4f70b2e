#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace cpsp {

constexpr std::uint64_t kSeedGamma = 0x9E3779B97F4A7C15ULL;

// splitmix64 finalizer
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

// Sub-seed for stream `index` under a master seed. Equals the (index+1)-th
// output of splitmix64 seeded with `master`, so per-stream randomness is
// independent of how work is partitioned across threads.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(master + (index + 1) * kSeedGamma);
}

// Deterministic random source: mt19937_64 (exactly specified by the standard)
// plus explicit bit-level double conversion and Box-Muller, so generated
// streams depend only on the seed and not on library distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // uniform on [0,1), 53-bit resolution
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // one standard-normal pair per two engine draws (Box-Muller)
  void normal_pair(double& a, double& b) {
    const double u1 = 1.0 - uniform();  // (0,1], keeps log() finite
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    a = r * std::cos(2.0 * M_PI * u2);
    b = r * std::sin(2.0 * M_PI * u2);
  }

  // CN(0,1): independent real/imaginary parts, variance 1/2 each
  std::complex<double> cnormal() {
    double a, b;
    normal_pair(a, b);
    return {a * M_SQRT1_2, b * M_SQRT1_2};
  }

  std::uint64_t raw() { return eng_(); }

 private:
  std::mt19937_64 eng_;
};

}  // namespace cpsp
