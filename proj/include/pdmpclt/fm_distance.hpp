#pragma once

#include <cstddef>
#include <vector>

#include "pdmpclt/empirical.hpp"
#include "pdmpclt/state.hpp"

namespace pdmpclt {

struct FmOptions {
  std::size_t support_cap = 2000;
  bool want_dual = false;
};

struct FmResult {
  double distance = 0.0;
  // Union support (mu's points first, then nu's points not already present)
  // together with the optimal test function values; filled when want_dual.
  std::vector<HybridState> support;
  std::vector<double> dual;
};

// Exact Fortet-Mourier (bounded-Lipschitz) distance between empirical
// measures:
//
//   maximize sum_k f_k (mu_k - nu_k)
//   s.t.     -1 <= f_k <= 1,   |f_k - f_l| <= rho(x_k, x_l)
//
// over the union support. On finite supports the optimum restricted to
// support values is attained and extendable by McShane's construction, so
// this finite program is the exact distance, not an approximation.
//
// The program is solved through its network form: an uncapacitated min-cost
// flow whose node set is the union support plus one virtual node carrying
// unit-cost mass creation/destruction (the sup-norm box constraint). The
// successive-shortest-path potentials are exactly the optimal f values, and
// strong duality makes the returned objective the LP optimum.
FmResult fm_distance_full(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                          const HybridMetric& metric, const FmOptions& options = {});

double fm_distance(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                   const HybridMetric& metric, const FmOptions& options = {});

}  // namespace pdmpclt
