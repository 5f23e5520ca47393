#pragma once

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <vector>

#include "cartan/core.hpp"

namespace cartan {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

namespace detail {

/// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration on P_n.
inline QuadratureRule gauss_legendre_symmetric(int n) {
  QuadratureRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute derivative at the converged node
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    if (n == 1) p0 = 1.0;
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[i] = -x;
    r.nodes[n - 1 - i] = x;
    r.weights[i] = w;
    r.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) r.nodes[n / 2] = 0.0;
  return r;
}

}  // namespace detail

/// n-point Gauss-Legendre rule mapped to [0, 1]; cached per n.
inline const QuadratureRule& gauss_legendre_unit(int n) {
  if (n < 1 || n > 512) throw Error(ErrorKind::BadArgument, "Gauss-Legendre order must be 1..512");
  static std::mutex mutex;
  static std::map<int, QuadratureRule> cache;
  std::lock_guard lock(mutex);
  if (auto it = cache.find(n); it != cache.end()) return it->second;
  QuadratureRule sym = detail::gauss_legendre_symmetric(n);
  QuadratureRule unit;
  for (int i = 0; i < n; ++i) {
    unit.nodes.push_back(0.5 * (sym.nodes[i] + 1.0));
    unit.weights.push_back(0.5 * sym.weights[i]);
  }
  return cache.emplace(n, std::move(unit)).first->second;
}

/// Composite Simpson weights for n (even) equal intervals of width h.
inline std::vector<double> simpson_weights(int intervals, double h) {
  if (intervals < 2 || intervals % 2 != 0)
    throw Error(ErrorKind::BadArgument, "Simpson's rule needs an even number of intervals");
  std::vector<double> w(intervals + 1);
  for (int k = 0; k <= intervals; ++k) {
    const double c = (k == 0 || k == intervals) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
    w[k] = c * h / 3.0;
  }
  return w;
}

}  // namespace cartan
