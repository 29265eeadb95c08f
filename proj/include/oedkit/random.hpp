#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace oedkit {

// splitmix64 (Steele, Lea, Flood 2014). Distributions are written out here
// so streams are identical across standard libraries.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // [0, 1) with 53 random bits
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Box-Muller
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // Fisher-Yates
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(next() % i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// n points in [lo_k, hi_k]^d, one per stratum in every coordinate.
inline std::vector<std::vector<double>> latin_hypercube(
    std::size_t n, const std::vector<std::pair<double, double>>& bounds, std::uint64_t seed) {
  SplitMix64 rng(seed);
  const std::size_t d = bounds.size();
  std::vector<std::vector<double>> pts(n, std::vector<double>(d));
  for (std::size_t k = 0; k < d; ++k) {
    std::vector<std::size_t> strata(n);
    for (std::size_t i = 0; i < n; ++i) strata[i] = i;
    rng.shuffle(strata);
    const auto [lo, hi] = bounds[k];
    for (std::size_t i = 0; i < n; ++i) {
      const double u = (static_cast<double>(strata[i]) + rng.uniform()) / static_cast<double>(n);
      pts[i][k] = lo + (hi - lo) * u;
    }
  }
  return pts;
}

}  // namespace oedkit
