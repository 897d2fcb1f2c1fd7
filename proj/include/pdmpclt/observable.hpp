#pragma once

#include <algorithm>
#include <functional>
#include <optional>
#include <stdexcept>
#include <utility>

#include "pdmpclt/state.hpp"

namespace pdmpclt {

using ObservableFn = std::function<double(const StateView&)>;

// Bounded Lipschitz observable g with certified sup bound and Lipschitz
// constant with respect to the hybrid metric. The stationary mean is filled
// in once by the estimator and read by everything downstream; set it before
// sharing the observable across workers.
class Observable {
 public:
  Observable(ObservableFn eval, double sup_bound, double lip_const)
      : eval_(std::move(eval)), sup_bound_(sup_bound), lip_const_(lip_const) {
    if (sup_bound_ < 0.0 || lip_const_ < 0.0)
      throw std::invalid_argument("observable: negative certified bound");
  }

  double operator()(const StateView& x) const { return eval_(x); }

  double sup_bound() const { return sup_bound_; }
  double lip_const() const { return lip_const_; }
  double bl_norm() const { return std::max(sup_bound_, lip_const_); }

  bool has_mean() const { return mean_.has_value(); }
  double mean_under_mu_star() const {
    if (!mean_) throw std::logic_error("observable: mean_under_mu_star not estimated yet");
    return *mean_;
  }
  void set_mean_under_mu_star(double m) { mean_ = m; }

  // g - <g, mu*>.
  double centered(const StateView& x) const { return eval_(x) - mean_under_mu_star(); }

 private:
  ObservableFn eval_;
  double sup_bound_;
  double lip_const_;
  std::optional<double> mean_;
};

// g(y,i) = clamp(y[0], -radius, radius); 1-Lipschitz for any metric that
// dominates |y1[0]-y2[0]| (true for the Euclidean builtins).
Observable make_clamp_linear(double radius);

// g(y,i) = cos(freq * y[0]).
Observable make_cosine(double freq);

// Piecewise-linear interpolation of (y, value) knots on y[0], constant
// outside the knot range.
Observable make_tabulated(std::vector<std::pair<double, double>> knots);

}  // namespace pdmpclt
