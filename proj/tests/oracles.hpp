#pragma once

// Independent oracles for the test suite. Everything here deliberately takes
// a different computational route from the library implementation it checks.

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "pdmpclt/state.hpp"

namespace oracles {

// High-precision normal CDF through std::erfc (the implementation under test
// uses a rational approximation instead).
inline double normal_cdf_ref(double u, double sigma) {
  if (sigma == 0.0) return u >= 0.0 ? 1.0 : 0.0;
  return 0.5 * std::erfc(-u / (sigma * std::sqrt(2.0)));
}

// Quantile function by bisection on the reference CDF.
inline double normal_quantile_ref(double p, double sigma) {
  double lo = -12.0 * (sigma + 1.0), hi = 12.0 * (sigma + 1.0);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf_ref(mid, sigma) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// W1 between two weighted samples on the real line: area between CDFs.
// Exact for one-dimensional clouds, no linear programming involved.
inline double w1_line(std::vector<std::pair<double, double>> a,
                      std::vector<std::pair<double, double>> b) {
  for (auto& [y, w] : b) w = -w;
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  double area = 0.0, cdf = 0.0;
  for (std::size_t i = 0; i + 1 < a.size(); ++i) {
    cdf += a[i].second;
    area += std::abs(cdf) * (a[i + 1].first - a[i].first);
  }
  return area;
}

// Brute-force oracle for the 3-point bounded-Lipschitz program: enumerate all
// vertices of the feasible polytope (triples of active constraints from the
// 6 box facets and 6 pairwise constraints) and take the best feasible one.
inline double fm3_vertex_enumeration(const std::array<double, 3>& net,
                                     const std::array<std::array<double, 3>, 3>& rho) {
  struct Row {
    std::array<double, 3> a;
    double b;
  };
  std::vector<Row> rows;
  for (int k = 0; k < 3; ++k) {
    Row up{{0, 0, 0}, 1.0}, dn{{0, 0, 0}, 1.0};
    up.a[static_cast<std::size_t>(k)] = 1.0;
    dn.a[static_cast<std::size_t>(k)] = -1.0;
    rows.push_back(up);
    rows.push_back(dn);
  }
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l) {
      if (k == l) continue;
      Row r{{0, 0, 0}, rho[static_cast<std::size_t>(k)][static_cast<std::size_t>(l)]};
      r.a[static_cast<std::size_t>(k)] = 1.0;
      r.a[static_cast<std::size_t>(l)] = -1.0;
      rows.push_back(r);
    }

  auto solve3 = [](const Row& r0, const Row& r1, const Row& r2,
                   std::array<double, 3>& x) -> bool {
    double m[3][4] = {{r0.a[0], r0.a[1], r0.a[2], r0.b},
                      {r1.a[0], r1.a[1], r1.a[2], r1.b},
                      {r2.a[0], r2.a[1], r2.a[2], r2.b}};
    for (int col = 0; col < 3; ++col) {
      int pivot = col;
      for (int r = col + 1; r < 3; ++r)
        if (std::abs(m[r][col]) > std::abs(m[pivot][col])) pivot = r;
      if (std::abs(m[pivot][col]) < 1e-12) return false;
      std::swap(m[col], m[pivot]);
      for (int r = 0; r < 3; ++r) {
        if (r == col) continue;
        const double f = m[r][col] / m[col][col];
        for (int c = col; c < 4; ++c) m[r][c] -= f * m[col][c];
      }
    }
    for (int k = 0; k < 3; ++k) x[static_cast<std::size_t>(k)] = m[k][3] / m[k][k];
    return true;
  };

  double best = 0.0;  // f = 0 is always feasible
  std::array<double, 3> x{};
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = i + 1; j < rows.size(); ++j)
      for (std::size_t k = j + 1; k < rows.size(); ++k) {
        if (!solve3(rows[i], rows[j], rows[k], x)) continue;
        bool feasible = true;
        for (const Row& r : rows) {
          if (r.a[0] * x[0] + r.a[1] * x[1] + r.a[2] * x[2] > r.b + 1e-9) {
            feasible = false;
            break;
          }
        }
        if (!feasible) continue;
        best = std::max(best, net[0] * x[0] + net[1] * x[1] + net[2] * x[2]);
      }
  return best;
}

// Closed forms for the contract-multijump model.
struct ContractFacts {
  double alpha = 1.0, kappa = 0.5, lambda = 1.0;

  double chi(double y) const { return y / (alpha + lambda * (1.0 - kappa)); }
  double drift_rate() const { return 2.0 * alpha + lambda * (1.0 - kappa * kappa); }
  double mean_decay_rate() const { return alpha + lambda * (1.0 - kappa); }
  // P(t) V^2(y) = y^2 e^{-(2 alpha + lambda (1 - kappa^2)) t}
  double ptv2(double y, double t) const { return y * y * std::exp(-drift_rate() * t); }
};

}  // namespace oracles
