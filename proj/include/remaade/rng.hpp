#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace remaade {

// Deterministic random stream. std::mt19937_64 is fully specified by the
// standard, so identical seeds give identical raw draws on every platform.
// All distributions are implemented here (never via std:: distribution
// classes, whose output is implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; always consumes exactly two uniforms.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Index in [0, n).
  std::size_t below(std::size_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
    return static_cast<std::size_t>(gen_() % n);
  }

  // Draw from a categorical distribution given (possibly unnormalized is NOT
  // allowed) probabilities. Falls back to the last index if rounding leaves
  // the cumulative sum below the draw.
  int categorical(std::span<const double> probs) {
    if (probs.empty()) throw std::invalid_argument("Rng::categorical: empty distribution");
    double u = uniform();
    double cum = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      cum += probs[i];
      if (u < cum) return static_cast<int>(i);
    }
    return static_cast<int>(probs.size()) - 1;
  }

  // Uniform random permutation of {0, ..., n-1} (Fisher-Yates).
  std::vector<int> permutation(int n) {
    std::vector<int> p(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
    for (int i = n - 1; i > 0; --i) {
      std::size_t j = below(static_cast<std::size_t>(i) + 1);
      std::swap(p[static_cast<std::size_t>(i)], p[j]);
    }
    return p;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace remaade
