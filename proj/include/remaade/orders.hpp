#pragma once

#include <cmath>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "remaade/policy.hpp"
#include "remaade/rng.hpp"

namespace remaade {

// Factorization-order ensemble: S distinct permutations sharing one set of
// policy parameters. The identity order always comes first, so S=1 reproduces
// the plain autoregressive model exactly.
class OrderSet {
 public:
  OrderSet(int n, int s, Rng& rng) {
    if (n < 1) throw std::invalid_argument("OrderSet: N must be >= 1");
    if (s < 1) throw std::invalid_argument("OrderSet: S must be >= 1");
    // N! with saturation; N >= 21 overflows 64 bits and any practical S fits.
    std::uint64_t total = 1;
    for (int i = 2; i <= n && total <= (UINT64_MAX >> 6); ++i)
      total *= static_cast<std::uint64_t>(i);
    if (n <= 20 && static_cast<std::uint64_t>(s) > total)
      throw std::invalid_argument("OrderSet: S = " + std::to_string(s) +
                                  " exceeds N! = " + std::to_string(total));
    orders_.push_back(identity_order(n));
    std::set<std::vector<int>> seen{orders_.front()};
    while (static_cast<int>(orders_.size()) < s) {
      std::vector<int> z = rng.permutation(n);
      if (seen.insert(z).second) orders_.push_back(std::move(z));
    }
  }

  int size() const { return static_cast<int>(orders_.size()); }
  const std::vector<int>& order(int idx) const { return orders_.at(static_cast<std::size_t>(idx)); }
  const std::vector<std::vector<int>>& all() const { return orders_; }

  int index_of(const std::vector<int>& z) const {
    for (int i = 0; i < size(); ++i)
      if (orders_[static_cast<std::size_t>(i)] == z) return i;
    return -1;
  }

 private:
  std::vector<std::vector<int>> orders_;
};

// log P(z, a) = -log S + log P(a | order z). The uniform order factor is a
// constant, so it cancels in PPO ratios and does not affect gradients.
inline double joint_log_prob(const Policy& pol, const OrderSet& orders, const std::vector<int>& z,
                             const ActionString& s) {
  if (orders.index_of(z) < 0)
    throw std::invalid_argument("joint_log_prob: order is not a member of the set");
  return -std::log(static_cast<double>(orders.size())) + log_prob(pol, s, z);
}

struct JointSample {
  int order_index = 0;
  ActionString values;
  double joint_log_prob = 0.0;
};

inline JointSample sample_joint(const Policy& pol, const OrderSet& orders, Rng& rng,
                                int max_attempts = 1000) {
  const int zi = static_cast<int>(rng.below(static_cast<std::size_t>(orders.size())));
  SampleResult r = sample_valid_string(pol, orders.order(zi), rng, max_attempts);
  return {zi, std::move(r.values),
          -std::log(static_cast<double>(orders.size())) + r.log_prob};
}

}  // namespace remaade
