#pragma once

#include <chrono>
#include <cmath>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "remaade/critic.hpp"
#include "remaade/envs.hpp"
#include "remaade/mathutil.hpp"
#include "remaade/trainer.hpp"

namespace remaade {

// Per-round evaluation datasets plus policy snapshots; log-probs of every
// historical string under every historical policy are filled lazily for the
// covariate-shift weights.
class EvalHistory {
 public:
  struct Round {
    std::vector<BatchSample> samples;
    ParamStore policy_params;  // theta^t snapshot
  };

  void append(Round round) { rounds_.push_back(std::move(round)); }

  int rounds() const { return static_cast<int>(rounds_.size()); }
  const Round& round(int t) const { return rounds_.at(static_cast<std::size_t>(t)); }

  int total_samples() const {
    int n = 0;
    for (const auto& r : rounds_) n += static_cast<int>(r.samples.size());
    return n;
  }

  const BatchSample& sample(int global_index) const {
    int j = global_index;
    for (const auto& r : rounds_) {
      if (j < static_cast<int>(r.samples.size())) return r.samples[static_cast<std::size_t>(j)];
      j -= static_cast<int>(r.samples.size());
    }
    throw std::out_of_range("EvalHistory: sample index out of range");
  }

  // log P(a_j; theta^tau) for every historical sample j, under the sample's
  // own factorization order. scratch must share the run's policy layout; its
  // parameters are overwritten.
  const std::vector<double>& log_probs_under(int tau, Policy& scratch, const OrderSet& orders) {
    if (tau < 0 || tau >= rounds()) throw std::out_of_range("EvalHistory: bad policy index");
    cache_.resize(static_cast<std::size_t>(rounds()));
    auto& row = cache_[static_cast<std::size_t>(tau)];
    const int total = total_samples();
    if (static_cast<int>(row.size()) == total) return row;
    const auto& snap = rounds_[static_cast<std::size_t>(tau)].policy_params;
    if (!scratch.params().same_layout(snap))
      throw std::invalid_argument("EvalHistory: scratch policy layout mismatch");
    for (std::size_t i = 0; i < snap.size(); ++i) scratch.params().flat()[i] = snap.flat()[i];
    for (int j = static_cast<int>(row.size()); j < total; ++j) {
      const BatchSample& smp = sample(j);
      row.push_back(log_prob(scratch, smp.values, orders.order(smp.order_index)));
    }
    return row;
  }

 private:
  std::vector<Round> rounds_;
  std::vector<std::vector<double>> cache_;  // cache_[tau][global sample]
};

// w(a) = (t+1) P(a; theta^t) / sum_tau P(a; theta^tau), computed in log space
// and clamped to [0, w_max]. All-identical policies give weight 1 exactly.
inline std::vector<double> mixture_importance_weights(EvalHistory& history, Policy& scratch,
                                                      const OrderSet& orders, double w_max) {
  const int t = history.rounds() - 1;
  if (t < 0) throw std::invalid_argument("mixture_importance_weights: empty history");
  const int total = history.total_samples();
  std::vector<std::vector<double>> lp(static_cast<std::size_t>(t) + 1);
  for (int tau = 0; tau <= t; ++tau) lp[static_cast<std::size_t>(tau)] =
      history.log_probs_under(tau, scratch, orders);
  std::vector<double> weights(static_cast<std::size_t>(total));
  std::vector<double> terms(static_cast<std::size_t>(t) + 1);
  for (int j = 0; j < total; ++j) {
    for (int tau = 0; tau <= t; ++tau) {
      const double v = lp[static_cast<std::size_t>(tau)][static_cast<std::size_t>(j)];
      if (!std::isfinite(v))
        throw std::runtime_error("mixture_importance_weights: non-finite log-prob");
      terms[static_cast<std::size_t>(tau)] = v;
    }
    const double log_num = std::log(static_cast<double>(t + 1)) +
                           lp[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)];
    const double w = std::exp(log_num - log_sum_exp(terms));
    weights[static_cast<std::size_t>(j)] = std::min(w, w_max);
  }
  return weights;
}

// Fits the simulator on all historical samples under the given weights.
inline std::shared_ptr<FittedCritic> fit_critic(const EvalHistory& history,
                                                const std::vector<double>& weights,
                                                const SearchSpace& space,
                                                const CriticConfig& cfg, Rng& rng) {
  const int total = history.total_samples();
  if (total < 1) throw std::invalid_argument("fit_critic: need >= 1 sample");
  if (static_cast<int>(weights.size()) != total)
    throw std::invalid_argument("fit_critic: one weight per historical sample required");
  std::vector<std::vector<double>> xs;
  std::vector<double> fs;
  xs.reserve(static_cast<std::size_t>(total));
  for (int j = 0; j < total; ++j) {
    const auto& smp = history.sample(j);
    xs.push_back(encode_for_critic(space, smp.values));
    fs.push_back(smp.reward);
  }
  auto critic = std::make_shared<FittedCritic>(space, cfg.hidden, rng);
  critic->fit(xs, fs, weights, cfg);
  return critic;
}

enum class ValueMode { kSampled, kExhaustive, kAuto };

// Exhaustive-mode memo, keyed by (order index, prefix values). Only
// deterministic exhaustive estimates are ever cached.
using ValueCache = std::map<std::pair<int, std::vector<int>>, double>;

namespace detail {

inline std::uint64_t suffix_count(const SearchSpace& space, const std::vector<int>& order,
                                  int prefix_len) {
  std::uint64_t c = 1;
  for (int t = prefix_len; t < space.n(); ++t) {
    c *= static_cast<std::uint64_t>(space.dim(order[static_cast<std::size_t>(t)]));
    if (c > kEnumerationGuard) return c;
  }
  return c;
}

inline StringTape prefix_tape(const Policy& pol, const std::vector<int>& order,
                              const std::vector<int>& prefix_values) {
  StringTape tape(pol, order);
  for (int u = 0; u < static_cast<int>(prefix_values.size()); ++u) {
    tape.push_target();
    tape.commit_value(prefix_values[static_cast<std::size_t>(u)]);
  }
  return tape;
}

inline ActionString tape_string(const StringTape& tape) {
  ActionString s(static_cast<std::size_t>(tape.n()), 0);
  for (int t = 0; t < tape.committed(); ++t)
    s[static_cast<std::size_t>(tape.order()[static_cast<std::size_t>(t)])] =
        tape.values()[static_cast<std::size_t>(t)];
  return s;
}

}  // namespace detail

// Value estimate V(prefix): expected critic prediction over completions drawn
// from the policy. Exhaustive mode sums P(suffix | prefix) * S(a) exactly;
// sampled mode averages L policy rollouts. A full prefix returns the critic
// prediction itself.
inline double estimate_value(const Policy& pol, const Critic& critic,
                             const std::vector<int>& order,
                             const std::vector<int>& prefix_values, int L, Rng& rng,
                             ValueMode mode = ValueMode::kAuto,
                             long exhaustive_limit = 1024) {
  const int n = pol.space().n();
  const int prefix_len = static_cast<int>(prefix_values.size());
  if (prefix_len > n) throw std::invalid_argument("estimate_value: prefix longer than N");
  StringTape prefix = detail::prefix_tape(pol, order, prefix_values);
  if (prefix_len == n) return critic.predict(detail::tape_string(prefix));
  const std::uint64_t combos = detail::suffix_count(pol.space(), order, prefix_len);
  if (mode == ValueMode::kAuto)
    mode = combos <= static_cast<std::uint64_t>(exhaustive_limit) ? ValueMode::kExhaustive
                                                                  : ValueMode::kSampled;
  if (mode == ValueMode::kExhaustive) {
    if (combos > kEnumerationGuard)
      throw std::runtime_error("estimate_value: " + std::to_string(combos) +
                               " completions exceed the enumeration guard");
    double value = 0.0;
    // odometer over suffix values in order-position space
    std::vector<int> suffix(static_cast<std::size_t>(n - prefix_len), 0);
    while (true) {
      StringTape tape = prefix;
      double lp = 0.0;
      for (int t = prefix_len; t < n; ++t) {
        const auto& logp = tape.push_target();
        const int v = suffix[static_cast<std::size_t>(t - prefix_len)];
        lp += logp[static_cast<std::size_t>(v)];
        tape.commit_value(v);
      }
      value += std::exp(lp) * critic.predict(detail::tape_string(tape));
      int pos = n - prefix_len - 1;
      while (pos >= 0) {
        const int hp = order[static_cast<std::size_t>(prefix_len + pos)];
        if (++suffix[static_cast<std::size_t>(pos)] < pol.space().dim(hp)) break;
        suffix[static_cast<std::size_t>(pos)] = 0;
        --pos;
      }
      if (pos < 0) break;
    }
    return value;
  }
  if (L < 1) throw std::invalid_argument("estimate_value: L must be >= 1 in sampled mode");
  double acc = 0.0;
  for (int l = 0; l < L; ++l) {
    StringTape tape = prefix;
    for (int t = prefix_len; t < n; ++t) {
      const auto& logp = tape.push_target();
      std::vector<double> probs(logp.size());
      for (std::size_t j = 0; j < logp.size(); ++j) probs[j] = std::exp(logp[j]);
      tape.commit_value(rng.categorical(probs));
    }
    acc += critic.predict(detail::tape_string(tape));
  }
  return acc / static_cast<double>(L);
}

// Per-position advantage estimator:
//   (1/B) sum_k sum_i grad log P(a_i^k | prefix) * [f(a^k) - V(prefix before i)]
// with V at i=1 conditioning on the empty prefix. Exhaustive values are
// memoized per update through the optional cache.
inline ParamStore actor_critic_gradient(const Policy& pol, const Batch& batch,
                                        const Critic& critic, int L, Rng& rng,
                                        const OrderSet& orders,
                                        ValueMode mode = ValueMode::kAuto,
                                        long exhaustive_limit = 1024,
                                        ValueCache* cache = nullptr) {
  ParamStore grad = pol.params().zeros_like();
  const int n = pol.space().n();
  for (const auto& smp : batch.samples) {
    const auto& order = orders.order(smp.order_index);
    StringTape tape = make_tape(pol, smp.values, order);
    std::vector<std::vector<double>> seeds(static_cast<std::size_t>(n));
    std::vector<int> prefix;
    prefix.reserve(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t) {
      double value = 0.0;
      ValueMode step_mode = mode;
      if (step_mode == ValueMode::kAuto)
        step_mode = detail::suffix_count(pol.space(), order, t) <=
                            static_cast<std::uint64_t>(exhaustive_limit)
                        ? ValueMode::kExhaustive
                        : ValueMode::kSampled;
      if (step_mode == ValueMode::kExhaustive && cache) {
        auto key = std::make_pair(smp.order_index, prefix);
        auto it = cache->find(key);
        if (it != cache->end()) {
          value = it->second;
        } else {
          value = estimate_value(pol, critic, order, prefix, L, rng, step_mode,
                                 exhaustive_limit);
          cache->emplace(std::move(key), value);
        }
      } else {
        value = estimate_value(pol, critic, order, prefix, L, rng, step_mode, exhaustive_limit);
      }
      const double adv = smp.reward - value;
      const auto& logp = tape.step(t).logp;
      auto& seed = seeds[static_cast<std::size_t>(t)];
      seed.resize(logp.size());
      for (std::size_t j = 0; j < logp.size(); ++j) seed[j] = -adv * std::exp(logp[j]);
      seed[static_cast<std::size_t>(tape.values()[static_cast<std::size_t>(t)])] += adv;
      prefix.push_back(tape.values()[static_cast<std::size_t>(t)]);
    }
    tape.backward(seeds, grad);
  }
  grad.scale(1.0 / static_cast<double>(batch.size()));
  return grad;
}

// Algorithm: actor-critic search. Each round samples a batch, refits the
// simulator on the weighted history, and applies the per-position advantage
// gradient through Adam. Runs floor(E/B) rounds.
inline RunResult run_reacts(const RunConfig& config, const SearchSpace& space, Environment& env,
                            Rng& rng, std::shared_ptr<Environment> critic_env = nullptr,
                            const ParamStore* init_params = nullptr) {
  if (config.algorithm != Algorithm::kReacts)
    throw std::invalid_argument("run_reacts: algorithm must be reacts");
  config.validate();
  if (config.budget < config.batch) throw std::invalid_argument("config: E must be >= B");
  if (config.exact_critic && !critic_env)
    throw std::invalid_argument("run_reacts: exact critic mode requires the tabular env handle");
  const auto t0 = std::chrono::steady_clock::now();
  PolicyConfig pc;
  pc.kind = PolicyKind::kMaade;
  pc.d = config.d;
  pc.d_ff = config.resolved_d_ff();
  pc.M = config.M;
  Policy pol(space, pc, rng);
  if (init_params) {
    if (!pol.params().same_layout(*init_params))
      throw std::invalid_argument("run_reacts: initial parameters have a different layout");
    for (std::size_t i = 0; i < pol.params().size(); ++i)
      pol.params().flat()[i] = init_params->flat()[i];
  }
  Policy scratch = pol;  // layout twin for historical log-prob evaluation
  OrderSet orders(space.n(), config.S, rng);
  AdamState adam(pol.params());
  EvalHistory history;
  CriticConfig critic_cfg{config.critic_hidden, config.critic_alpha, config.critic_epochs};
  RunResult result;
  for (int zi = 0; zi < orders.size(); ++zi)
    result.metadata.emplace_back("order" + std::to_string(zi),
                                 detail::order_to_string(orders.order(zi)));
  const long rounds = config.budget / config.batch;
  long e = 0;
  for (long t = 0; t < rounds; ++t) {
    Batch batch = detail::sample_batch(pol, orders, env, config.batch, config.max_attempts,
                                       rng, t);
    detail::track_best(batch, result);
    e += config.batch;
    result.trajectory.emplace_back(e, result.best_reward);
    history.append({batch.samples, pol.params()});
    std::shared_ptr<Critic> critic;
    if (config.exact_critic) {
      critic = exact_critic(critic_env);
    } else {
      auto weights = mixture_importance_weights(history, scratch, orders, config.weight_clamp);
      critic = fit_critic(history, weights, space, critic_cfg, rng);
    }
    ValueCache cache;
    ParamStore grad =
        actor_critic_gradient(pol, batch, *critic, config.L, rng, orders, ValueMode::kAuto,
                              config.exhaustive_value_limit, &cache);
    if (config.entropy_coef > 0.0)
      grad.add_scaled(entropy_gradient(pol, batch, orders), config.entropy_coef);
    adam_step(pol.params(), grad, adam, config.alpha);
  }
  result.explorations = e;
  result.final_params = pol.params();
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace remaade
