#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace remaade {

inline double log_sum_exp(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("log_sum_exp: empty vector");
  double mx = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

// Stable log-softmax via max subtraction; exp of the result sums to 1.
inline std::vector<double> log_softmax(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("log_softmax: empty vector");
  double lse = log_sum_exp(v);
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] - lse;
  return out;
}

inline std::vector<double> softmax(std::span<const double> v) {
  std::vector<double> out = log_softmax(v);
  for (double& x : out) x = std::exp(x);
  return out;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// y = W x, W row-major (rows x cols)
inline void matvec(std::span<const double> W, int rows, int cols,
                   std::span<const double> x, std::span<double> y) {
  for (int r = 0; r < rows; ++r) {
    double s = 0.0;
    const double* row = W.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols);
    for (int c = 0; c < cols; ++c) s += row[c] * x[static_cast<std::size_t>(c)];
    y[static_cast<std::size_t>(r)] = s;
  }
}

// y += W^T x, W row-major (rows x cols), x has length rows, y length cols
inline void matvec_t_acc(std::span<const double> W, int rows, int cols,
                         std::span<const double> x, std::span<double> y) {
  for (int r = 0; r < rows; ++r) {
    const double xr = x[static_cast<std::size_t>(r)];
    const double* row = W.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols);
    for (int c = 0; c < cols; ++c) y[static_cast<std::size_t>(c)] += row[c] * xr;
  }
}

// W += a * (x outer y), W row-major (len(x) rows, len(y) cols)
inline void outer_acc(std::span<double> W, std::span<const double> x,
                      std::span<const double> y, double a = 1.0) {
  for (std::size_t r = 0; r < x.size(); ++r) {
    double* row = W.data() + r * y.size();
    const double xr = a * x[r];
    for (std::size_t c = 0; c < y.size(); ++c) row[c] += xr * y[c];
  }
}

inline void axpy(std::span<double> y, std::span<const double> x, double a = 1.0) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

}  // namespace remaade
