#pragma once

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "remaade/adam.hpp"
#include "remaade/envs.hpp"
#include "remaade/mathutil.hpp"
#include "remaade/param_store.hpp"
#include "remaade/rng.hpp"
#include "remaade/search_space.hpp"

namespace remaade {

// Concatenated one-hot blocks in hyperparameter index order; length sum D_i,
// exactly N ones.
inline std::vector<double> encode_for_critic(const SearchSpace& space, const ActionString& s) {
  space.check_shape(s);
  std::size_t len = 0;
  for (int i = 0; i < space.n(); ++i) len += static_cast<std::size_t>(space.dim(i));
  std::vector<double> x(len, 0.0);
  std::size_t off = 0;
  for (int i = 0; i < space.n(); ++i) {
    x[off + static_cast<std::size_t>(s[static_cast<std::size_t>(i)])] = 1.0;
    off += static_cast<std::size_t>(space.dim(i));
  }
  return x;
}

// Reward simulator S_phi(a): prediction of f(a) given only the string.
class Critic {
 public:
  virtual ~Critic() = default;
  virtual double predict(const ActionString& s) const = 0;
};

struct CriticConfig {
  int hidden = 64;
  double alpha = 1e-3;
  int epochs = 200;
};

// One-hidden-layer regressor on the one-hot encoding: w2 . tanh(W1 x + b1) + b2.
class FittedCritic : public Critic {
 public:
  FittedCritic(SearchSpace space, int hidden, Rng& rng) : space_(std::move(space)) {
    std::size_t in = 0;
    for (int i = 0; i < space_.n(); ++i) in += static_cast<std::size_t>(space_.dim(i));
    in_ = static_cast<int>(in);
    hidden_ = hidden;
    w1_ = params_.add("critic.W1", {hidden_, in_});
    b1_ = params_.add("critic.b1", {hidden_});
    w2_ = params_.add("critic.w2", {hidden_});
    b2_ = params_.add("critic.b2", {1});
    params_.freeze();
    const double s1 = 1.0 / std::sqrt(static_cast<double>(in_));
    for (double& w : params_.values(w1_)) w = s1 * rng.normal();
    const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden_));
    for (double& w : params_.values(w2_)) w = s2 * rng.normal();
  }

  double predict_features(std::span<const double> x) const {
    std::vector<double> h(static_cast<std::size_t>(hidden_));
    matvec(params_.values(w1_), hidden_, in_, x, h);
    auto b1 = params_.values(b1_);
    for (int r = 0; r < hidden_; ++r)
      h[static_cast<std::size_t>(r)] =
          std::tanh(h[static_cast<std::size_t>(r)] + b1[static_cast<std::size_t>(r)]);
    return dot(params_.values(w2_), h) + params_.values(b2_)[0];
  }

  double predict(const ActionString& s) const override {
    return predict_features(encode_for_critic(space_, s));
  }

  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  int input_dim() const { return in_; }
  int hidden_dim() const { return hidden_; }
  const SearchSpace& space() const { return space_; }

  // Weighted MSE sum_k w_k (pred_k - f_k)^2 / sum_k w_k and the gradient of
  // its negation (ascent form, so adam_step can consume it directly).
  double neg_loss_gradient(const std::vector<std::vector<double>>& features,
                           const std::vector<double>& targets,
                           const std::vector<double>& weights, ParamStore& grad) const {
    double wsum = 0.0;
    for (double w : weights) wsum += w;
    if (!(wsum > 0.0)) throw std::invalid_argument("FittedCritic: weights sum to zero");
    double loss = 0.0;
    auto W1 = params_.values(w1_);
    auto b1 = params_.values(b1_);
    auto w2 = params_.values(w2_);
    auto b2 = params_.values(b2_);
    auto dW1 = grad.values(w1_);
    auto db1 = grad.values(b1_);
    auto dw2 = grad.values(w2_);
    auto db2 = grad.values(b2_);
    std::vector<double> h(static_cast<std::size_t>(hidden_));
    std::vector<double> dz(static_cast<std::size_t>(hidden_));
    for (std::size_t k = 0; k < features.size(); ++k) {
      if (weights[k] == 0.0) continue;
      const auto& x = features[k];
      matvec(W1, hidden_, in_, x, h);
      for (int r = 0; r < hidden_; ++r)
        h[static_cast<std::size_t>(r)] =
            std::tanh(h[static_cast<std::size_t>(r)] + b1[static_cast<std::size_t>(r)]);
      const double pred = dot(w2, h) + b2[0];
      const double err = pred - targets[k];
      loss += weights[k] * err * err;
      const double g = 2.0 * weights[k] * err / wsum;
      axpy(dw2, h, -g);
      db2[0] -= g;
      for (int r = 0; r < hidden_; ++r) {
        const double hr = h[static_cast<std::size_t>(r)];
        dz[static_cast<std::size_t>(r)] = -g * w2[static_cast<std::size_t>(r)] * (1.0 - hr * hr);
      }
      outer_acc(dW1, dz, x);
      axpy(db1, dz);
    }
    return loss / wsum;
  }

  // Minimizes the weighted MSE by full-batch Adam for a fixed epoch count.
  void fit(const std::vector<std::vector<double>>& features, const std::vector<double>& targets,
           const std::vector<double>& weights, const CriticConfig& cfg) {
    if (features.empty()) throw std::invalid_argument("FittedCritic::fit: need >= 1 sample");
    if (features.size() != targets.size() || features.size() != weights.size())
      throw std::invalid_argument("FittedCritic::fit: feature/target/weight size mismatch");
    AdamState adam(params_);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      ParamStore grad = params_.zeros_like();
      const double loss = neg_loss_gradient(features, targets, weights, grad);
      if (!std::isfinite(loss))
        throw std::runtime_error("FittedCritic::fit: diverged (non-finite loss) at epoch " +
                                 std::to_string(epoch));
      adam_step(params_, grad, adam, cfg.alpha);
    }
  }

  double weighted_mse(const std::vector<std::vector<double>>& features,
                      const std::vector<double>& targets,
                      const std::vector<double>& weights) const {
    double wsum = 0.0, loss = 0.0;
    for (std::size_t k = 0; k < features.size(); ++k) {
      const double err = predict_features(features[k]) - targets[k];
      loss += weights[k] * err * err;
      wsum += weights[k];
    }
    return loss / wsum;
  }

 private:
  SearchSpace space_;
  ParamStore params_;
  int in_ = 0, hidden_ = 0;
  int w1_ = -1, b1_ = -1, w2_ = -1, b2_ = -1;
};

// Test oracle: S_phi replaced by the true f of a deterministic environment.
class ExactCritic : public Critic {
 public:
  explicit ExactCritic(std::shared_ptr<Environment> env) : env_(std::move(env)) {
    if (!env_->deterministic())
      throw std::invalid_argument("ExactCritic: environment must be deterministic and tabular");
  }
  double predict(const ActionString& s) const override { return env_->evaluate(s); }

 private:
  std::shared_ptr<Environment> env_;
};

inline std::shared_ptr<Critic> exact_critic(std::shared_ptr<Environment> env) {
  return std::make_shared<ExactCritic>(std::move(env));
}

}  // namespace remaade
