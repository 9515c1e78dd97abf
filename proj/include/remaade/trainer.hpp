#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "remaade/adam.hpp"
#include "remaade/envs.hpp"
#include "remaade/orders.hpp"
#include "remaade/policy.hpp"
#include "remaade/rng.hpp"

namespace remaade {

enum class Algorithm { kRandom, kReinforceIid, kRemaade, kReacts };

inline std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::kRandom: return "random";
    case Algorithm::kReinforceIid: return "reinforce-iid";
    case Algorithm::kRemaade: return "remaade";
    case Algorithm::kReacts: return "reacts";
  }
  return "?";
}

enum class BaselineKind { kBatchMean, kEma, kNone };

struct RunConfig {
  Algorithm algorithm = Algorithm::kRemaade;
  long budget = 150;  // E, environment evaluations
  int batch = 30;     // B
  double alpha = 1e-2;
  bool ppo = false;
  double eps = 0.1;    // PPO clip coefficient
  int ppo_epochs = 1;  // inner update passes per batch
  double entropy_coef = 0.0;
  BaselineKind baseline = BaselineKind::kBatchMean;
  double ema_gamma = 0.9;
  int d = 36;
  int d_ff = 0;  // 0 resolves to d
  int M = 1;
  int S = 1;  // factorization-order set size
  int L = 8;  // critic rollouts per value estimate
  std::uint64_t seed = 0;
  int max_attempts = 1000;
  // critic (reacts)
  int critic_hidden = 64;
  double critic_alpha = 1e-3;
  int critic_epochs = 200;
  double weight_clamp = 10.0;  // importance-weight clamp w_max
  bool exact_critic = false;   // replace the fitted critic by the true f (tabular envs)
  // value-estimation guard: exhaustive completions when the suffix space is
  // at most this large, otherwise L sampled rollouts
  long exhaustive_value_limit = 1024;

  int resolved_d_ff() const { return d_ff > 0 ? d_ff : d; }

  void validate() const {
    if (batch < 1) throw std::invalid_argument("config: B must be >= 1");
    if (budget < 1) throw std::invalid_argument("config: E must be >= 1");
    if (ppo && !(eps > 0.0)) throw std::invalid_argument("config: PPO requires eps > 0");
    if (ppo_epochs < 1) throw std::invalid_argument("config: ppo_epochs must be >= 1");
    if (ppo_epochs > 1 && !ppo)
      throw std::invalid_argument("config: ppo_epochs > 1 requires PPO");
    if (entropy_coef < 0.0) throw std::invalid_argument("config: entropy_coef must be >= 0");
    if (S < 1) throw std::invalid_argument("config: S must be >= 1");
    if (L < 1) throw std::invalid_argument("config: L must be >= 1");
    if (max_attempts < 1) throw std::invalid_argument("config: max_attempts must be >= 1");
  }
};

struct BatchSample {
  ActionString values;
  double reward = 0.0;
  double sampling_log_prob = 0.0;  // log P(a; theta') under its order at sampling time
  int order_index = 0;
  double advantage = 0.0;
};

struct Batch {
  std::vector<BatchSample> samples;
  int size() const { return static_cast<int>(samples.size()); }
};

struct RunResult {
  ActionString best_string;
  double best_reward = -std::numeric_limits<double>::infinity();
  std::vector<std::pair<long, double>> trajectory;  // (e, best-so-far)
  long explorations = 0;
  double seconds = 0.0;
  std::vector<std::pair<std::string, std::string>> metadata;
  ParamStore final_params;
};

struct BaselineState {
  double ema = 0.0;
};

// batch-mean: A_k = f_k - mean(f); ema(gamma): A_k = f_k - b, then
// b <- gamma*b + (1-gamma)*mean(f); none: A_k = f_k.
inline std::vector<double> compute_advantages(const std::vector<double>& rewards,
                                              BaselineKind kind, BaselineState& state,
                                              double ema_gamma = 0.9) {
  if (rewards.empty()) throw std::invalid_argument("compute_advantages: empty batch");
  for (double r : rewards)
    if (!std::isfinite(r)) throw std::invalid_argument("compute_advantages: non-finite reward");
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(rewards.size());
  std::vector<double> adv(rewards.size());
  switch (kind) {
    case BaselineKind::kBatchMean:
      for (std::size_t i = 0; i < rewards.size(); ++i) adv[i] = rewards[i] - mean;
      break;
    case BaselineKind::kEma:
      for (std::size_t i = 0; i < rewards.size(); ++i) adv[i] = rewards[i] - state.ema;
      state.ema = ema_gamma * state.ema + (1.0 - ema_gamma) * mean;
      break;
    case BaselineKind::kNone:
      adv = rewards;
      break;
  }
  return adv;
}

// (1/B) sum_k A_k * grad log P(a^k; theta), summed in batch order.
inline ParamStore reinforce_gradient(const Policy& pol, const Batch& batch,
                                     const OrderSet& orders) {
  ParamStore grad = pol.params().zeros_like();
  for (const auto& smp : batch.samples) {
    if (smp.advantage == 0.0) continue;
    StringTape tape = make_tape(pol, smp.values, orders.order(smp.order_index));
    tape.backward(log_prob_seeds(tape), grad, smp.advantage);
  }
  grad.scale(1.0 / static_cast<double>(batch.size()));
  return grad;
}

// Gradient of the clipped surrogate (1/B) sum_k min(A_k r_k, A_k clip(r_k)).
// On the clipped branch a sample contributes nothing; otherwise its gradient
// is A_k * r_k * grad log P(a^k; theta). The -log S order term cancels in r.
inline ParamStore ppo_gradient(const Policy& pol, const Batch& batch, const OrderSet& orders,
                               double eps) {
  ParamStore grad = pol.params().zeros_like();
  for (const auto& smp : batch.samples) {
    StringTape tape = make_tape(pol, smp.values, orders.order(smp.order_index));
    const double ratio = std::exp(tape.total_log_prob() - smp.sampling_log_prob);
    const bool clipped = (smp.advantage > 0.0 && ratio > 1.0 + eps) ||
                         (smp.advantage < 0.0 && ratio < 1.0 - eps);
    const double weight = clipped ? 0.0 : smp.advantage * ratio;
    if (weight == 0.0) continue;
    tape.backward(log_prob_seeds(tape), grad, weight);
  }
  grad.scale(1.0 / static_cast<double>(batch.size()));
  return grad;
}

// Gradient of (1/B) sum_k sum_t H(P(. | prefix_kt; theta)) with the sampled
// strings held fixed. dH/dlogit_j = -p_j (log p_j + H).
inline ParamStore entropy_gradient(const Policy& pol, const Batch& batch,
                                   const OrderSet& orders) {
  ParamStore grad = pol.params().zeros_like();
  for (const auto& smp : batch.samples) {
    StringTape tape = make_tape(pol, smp.values, orders.order(smp.order_index));
    std::vector<std::vector<double>> seeds(static_cast<std::size_t>(tape.n()));
    for (int t = 0; t < tape.n(); ++t) {
      const auto& logp = tape.step(t).logp;
      double entropy = 0.0;
      for (double lp : logp) entropy -= std::exp(lp) * lp;
      auto& s = seeds[static_cast<std::size_t>(t)];
      s.resize(logp.size());
      for (std::size_t j = 0; j < logp.size(); ++j)
        s[j] = -std::exp(logp[j]) * (logp[j] + entropy);
    }
    tape.backward(seeds, grad);
  }
  grad.scale(1.0 / static_cast<double>(batch.size()));
  return grad;
}

namespace detail {

inline Batch sample_batch(const Policy& pol, const OrderSet& orders, Environment& env, int b,
                          int max_attempts, Rng& rng, long round) {
  Batch batch;
  batch.samples.reserve(static_cast<std::size_t>(b));
  for (int k = 0; k < b; ++k) {
    BatchSample smp;
    if (orders.size() > 1) {
      smp.order_index = static_cast<int>(rng.below(static_cast<std::size_t>(orders.size())));
    }
    SampleResult sr = sample_valid_string(pol, orders.order(smp.order_index), rng, max_attempts);
    smp.values = std::move(sr.values);
    smp.sampling_log_prob = sr.log_prob;
    try {
      smp.reward = env.evaluate(smp.values);
    } catch (const std::exception& e) {
      throw std::runtime_error("environment failure at round " + std::to_string(round) +
                               ", sample " + std::to_string(k) + ": " + e.what());
    }
    if (!std::isfinite(smp.reward))
      throw std::runtime_error("environment returned a non-finite reward at round " +
                               std::to_string(round));
    batch.samples.push_back(std::move(smp));
  }
  return batch;
}

inline void track_best(const Batch& batch, RunResult& result) {
  for (const auto& smp : batch.samples) {
    if (smp.reward > result.best_reward) {
      result.best_reward = smp.reward;
      result.best_string = smp.values;
    }
  }
}

inline std::string order_to_string(const std::vector<int>& z) {
  std::string s;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (i) s += '-';
    s += std::to_string(z[i]);
  }
  return s;
}

}  // namespace detail

// Algorithm: REINFORCE (optionally PPO-clipped) over the autoregressive
// policy. Each round samples B valid strings, fetches rewards, and applies
// ppo_epochs ascent steps through Adam. Only valid evaluated strings count
// against the budget E; the final round is truncated so exactly E strings
// reach the environment.
inline RunResult run_remaade(const RunConfig& config, const SearchSpace& space, Environment& env,
                             Rng& rng, const ParamStore* init_params = nullptr) {
  if (config.algorithm != Algorithm::kRemaade && config.algorithm != Algorithm::kReinforceIid)
    throw std::invalid_argument("run_remaade: algorithm must be remaade or reinforce-iid");
  config.validate();
  if (config.budget < config.batch) throw std::invalid_argument("config: E must be >= B");
  const auto t0 = std::chrono::steady_clock::now();
  PolicyConfig pc;
  pc.kind = config.algorithm == Algorithm::kRemaade ? PolicyKind::kMaade : PolicyKind::kIid;
  pc.d = config.d;
  pc.d_ff = config.resolved_d_ff();
  pc.M = config.M;
  Policy pol(space, pc, rng);
  if (init_params) {
    if (!pol.params().same_layout(*init_params))
      throw std::invalid_argument("run_remaade: initial parameters have a different layout");
    for (std::size_t i = 0; i < pol.params().size(); ++i)
      pol.params().flat()[i] = init_params->flat()[i];
  }
  OrderSet orders(space.n(), config.S, rng);
  AdamState adam(pol.params());
  BaselineState baseline;
  RunResult result;
  for (int zi = 0; zi < orders.size(); ++zi)
    result.metadata.emplace_back("order" + std::to_string(zi),
                                 detail::order_to_string(orders.order(zi)));
  long e = 0;
  long round = 0;
  while (e < config.budget) {
    const int b = static_cast<int>(std::min<long>(config.batch, config.budget - e));
    Batch batch = detail::sample_batch(pol, orders, env, b, config.max_attempts, rng, round);
    detail::track_best(batch, result);
    std::vector<double> rewards;
    rewards.reserve(batch.samples.size());
    for (const auto& smp : batch.samples) rewards.push_back(smp.reward);
    const auto adv = compute_advantages(rewards, config.baseline, baseline, config.ema_gamma);
    for (std::size_t k = 0; k < adv.size(); ++k) batch.samples[k].advantage = adv[k];
    for (int epoch = 0; epoch < config.ppo_epochs; ++epoch) {
      ParamStore grad = config.ppo ? ppo_gradient(pol, batch, orders, config.eps)
                                   : reinforce_gradient(pol, batch, orders);
      if (config.entropy_coef > 0.0)
        grad.add_scaled(entropy_gradient(pol, batch, orders), config.entropy_coef);
      adam_step(pol.params(), grad, adam, config.alpha);
    }
    e += b;
    ++round;
    result.trajectory.emplace_back(e, result.best_reward);
  }
  result.explorations = e;
  result.final_params = pol.params();
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

inline ActionString sample_uniform_valid(const SearchSpace& space, Rng& rng,
                                         int max_attempts = 1000) {
  for (int a = 0; a < max_attempts; ++a) {
    ActionString s(static_cast<std::size_t>(space.n()));
    for (int i = 0; i < space.n(); ++i)
      s[static_cast<std::size_t>(i)] =
          static_cast<int>(rng.below(static_cast<std::size_t>(space.dim(i))));
    if (is_valid(space, s)) return s;
  }
  throw std::runtime_error("sample_uniform_valid: no valid string in " +
                           std::to_string(max_attempts) + " attempts");
}

// Uniform valid sampling; best-so-far recorded after every evaluation.
inline RunResult run_random_search(const RunConfig& config, const SearchSpace& space,
                                   Environment& env, Rng& rng) {
  const auto t0 = std::chrono::steady_clock::now();
  RunResult result;
  for (long e = 1; e <= config.budget; ++e) {
    ActionString s = sample_uniform_valid(space, rng, config.max_attempts);
    double reward = 0.0;
    try {
      reward = env.evaluate(s);
    } catch (const std::exception& ex) {
      throw std::runtime_error("environment failure at evaluation " + std::to_string(e) + ": " +
                               ex.what());
    }
    if (reward > result.best_reward) {
      result.best_reward = reward;
      result.best_string = s;
    }
    result.trajectory.emplace_back(e, result.best_reward);
  }
  result.explorations = config.budget;
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace remaade
