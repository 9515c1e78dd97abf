#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

#include "remaade/param_store.hpp"

namespace remaade {

// Central finite differences, (f(x+h) - f(x-h)) / (2h) per coordinate.
// Test oracle for the analytic gradients; O(2 * size) evaluations of f.
inline ParamStore central_finite_difference(
    const std::function<double(const ParamStore&)>& f, const ParamStore& params, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("central_finite_difference: h must be positive");
  ParamStore probe = params;
  ParamStore grad = params.zeros_like();
  auto x = probe.flat();
  auto g = grad.flat();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double fp = f(probe);
    x[i] = saved - h;
    const double fm = f(probe);
    x[i] = saved;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw std::runtime_error("central_finite_difference: non-finite value at coordinate " +
                               std::to_string(i));
    g[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

// Relative error with a max(1, |reference|) denominator, as used by the
// gradient-check tolerances.
inline double max_rel_error(const ParamStore& analytic, const ParamStore& reference) {
  auto a = analytic.flat();
  auto r = reference.flat();
  if (a.size() != r.size())
    throw std::invalid_argument("max_rel_error: size mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double denom = std::max(1.0, std::fabs(a[i]));
    worst = std::max(worst, std::fabs(a[i] - r[i]) / denom);
  }
  return worst;
}

}  // namespace remaade
