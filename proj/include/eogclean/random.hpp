#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace eogclean {

/// Seeded generator whose derived distributions are computed here rather
/// than by <random>'s implementation-defined distributions, so a seed gives
/// the same stream on every standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

  double exponential(double mean) { return -mean * std::log1p(-uniform()); }

  /// Zero-mean Laplace with unit variance.
  double laplace() {
    const double u = uniform() - 0.5;
    const double b = 1.0 / std::numbers::sqrt2;
    return (u < 0.0 ? b : -b) * std::log1p(-2.0 * std::abs(u));
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace eogclean
