#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "remaade/param_store.hpp"

namespace remaade {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t t = 0;
  AdamConfig cfg;

  explicit AdamState(std::size_t n, AdamConfig c = {})
      : m(n, 0.0), v(n, 0.0), cfg(c) {}
  explicit AdamState(const ParamStore& params, AdamConfig c = {})
      : AdamState(params.size(), c) {}
};

// Ascent step: params += alpha * mhat / (sqrt(vhat) + eps). The objective is
// maximized, so gradients are added, not subtracted.
inline void adam_step(ParamStore& params, const ParamStore& grads, AdamState& state,
                      double alpha) {
  if (!params.same_layout(grads))
    throw std::invalid_argument("adam_step: gradient layout does not match parameters");
  if (state.m.size() != params.size())
    throw std::invalid_argument("adam_step: state size does not match parameters");
  // Reject non-finite gradients up front, naming the offending tensor.
  for (int id = 0; id < grads.count(); ++id) {
    for (double g : grads.values(id))
      if (!std::isfinite(g))
        throw std::runtime_error("adam_step: non-finite gradient in tensor " +
                                 grads.info(id).name);
  }
  state.t += 1;
  const double b1 = state.cfg.beta1, b2 = state.cfg.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  auto p = params.flat();
  auto g = grads.flat();
  for (std::size_t i = 0; i < p.size(); ++i) {
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * g[i];
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * g[i] * g[i];
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    p[i] += alpha * mhat / (std::sqrt(vhat) + state.cfg.eps);
  }
}

}  // namespace remaade
