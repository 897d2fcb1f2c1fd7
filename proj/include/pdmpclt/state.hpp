#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace pdmpclt {

using Vec = std::vector<double>;

// A point x = (y, i) of the hybrid space X = Y x I: continuous coordinate
// plus regime index.
struct HybridState {
  Vec y;
  int regime = 0;
};

// Non-owning view of a hybrid state; hot loops use this to avoid allocating
// a fresh HybridState per evaluation.
struct StateView {
  std::span<const double> y;
  int regime = 0;

  StateView() = default;
  StateView(std::span<const double> y_, int regime_) : y(y_), regime(regime_) {}
  StateView(const HybridState& x) : y(x.y), regime(x.regime) {}  // NOLINT(google-explicit-constructor)
};

inline HybridState to_state(const StateView& v) {
  return HybridState{Vec(v.y.begin(), v.y.end()), v.regime};
}

using MetricFn = std::function<double(std::span<const double>, std::span<const double>)>;

// rho(x1,x2) = rho_y(y1,y2) + c * d(i1,i2), d the discrete metric on regimes.
struct HybridMetric {
  MetricFn rho_y;
  double c = 1.0;

  double operator()(const StateView& a, const StateView& b) const {
    return rho_y(a.y, b.y) + (a.regime == b.regime ? 0.0 : c);
  }
};

inline double euclidean(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace pdmpclt
