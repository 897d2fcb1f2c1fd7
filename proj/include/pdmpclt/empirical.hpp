#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "pdmpclt/rng.hpp"
#include "pdmpclt/state.hpp"

namespace pdmpclt {

// Weighted point set on X; the empirical stand-in for a probability law.
// Weights are normalized on construction so they sum to one exactly.
struct EmpiricalMeasure {
  std::vector<HybridState> points;
  std::vector<double> weights;

  static EmpiricalMeasure make(std::vector<HybridState> pts, std::vector<double> w) {
    if (pts.empty() || pts.size() != w.size())
      throw std::invalid_argument("empirical measure: need matching nonempty points/weights");
    double sum = 0.0;
    for (double x : w) {
      if (!(x >= 0.0)) throw std::invalid_argument("empirical measure: negative weight");
      sum += x;
    }
    if (sum <= 0.0) throw std::invalid_argument("empirical measure: zero total mass");
    for (double& x : w) x /= sum;
    return EmpiricalMeasure{std::move(pts), std::move(w)};
  }

  static EmpiricalMeasure uniform(std::vector<HybridState> pts) {
    std::vector<double> w(pts.size(), 1.0);
    return make(std::move(pts), std::move(w));
  }

  std::size_t size() const { return points.size(); }
};

// m i.i.d. draws by weight, returned with uniform weights 1/m.
EmpiricalMeasure subsample(const EmpiricalMeasure& mu, std::size_t m, RngStream& rng);

}  // namespace pdmpclt
