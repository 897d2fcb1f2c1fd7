#pragma once

#include <cstddef>
#include <vector>

#include "pdmpclt/corrector.hpp"
#include "pdmpclt/empirical.hpp"
#include "pdmpclt/model.hpp"
#include "pdmpclt/observable.hpp"
#include "pdmpclt/parallel.hpp"
#include "pdmpclt/statistics.hpp"
#include "pdmpclt/trajectory.hpp"

namespace pdmpclt {

// One path's decomposition (1/sqrt t) integral g_bar = M(t)/sqrt t + R(t):
//   M(t) = chi(path(t)) - chi(path(0)) + integral_0^t g_bar,
//   Z(n) = M(n) - M(n-1),   qv(n) = sum_{k<=n} Z(k)^2.
struct MartingaleDecomposition {
  std::vector<double> grid_t;  // sample times of M
  std::vector<double> m_path;  // M at grid_t
  std::vector<double> z;       // z[0] = 0, z[n] = Z(n) for integer n
  std::vector<double> qv;      // running quadratic-variation proxy, qv[n] = sum_{k<=n} Z(k)^2
  double r_horizon = 0.0;      // R at the trajectory horizon
  double horizon = 0.0;
  double chi_start = 0.0;      // chi at path(0) (the identity-check anchor)
  double chi_end = 0.0;        // chi at path(horizon)
  double integral_horizon = 0.0;

  std::size_t increments() const { return z.empty() ? 0 : z.size() - 1; }
};

// Evaluates M on a uniform grid and Z at integer times; the integral terms
// come from path_integral on the stored skeleton.
MartingaleDecomposition decompose(const Trajectory& traj, const PdmpModel& model,
                                  const Observable& g, const ChiFn& chi, double grid_step);

// sigma^2 = E_{mu*}(Z(1)^2): one unit of time from each start drawn from the
// empirical mu*. When the corrector evaluator reports its own statistical
// error, the per-sample chi sampling variance is subtracted so the estimator
// stays centered on the true second moment.
MeanEstimate sigma2_martingale(const PdmpModel& model, const Observable& g, const ChiFn& chi,
                               const EmpiricalMeasure& mu_star, std::size_t n_rep, RngStream rng,
                               const WorkerPool* pool = nullptr);

// sigma^2 = 2 <chi g_bar, mu*> evaluated on the mu* support; chi_values must
// align with the support points.
MeanEstimate sigma2_green(const Observable& g, const std::vector<MeanEstimate>& chi_values,
                          const EmpiricalMeasure& mu_star);

// Least-squares slope of the ensemble-mean quadratic variation against n.
MeanEstimate qv_slope(const std::vector<MartingaleDecomposition>& decomps, std::size_t n_max);

struct Sigma2Report {
  MeanEstimate martingale;
  MeanEstimate green;
  MeanEstimate qv;
  double agreement_z = 0.0;  // worst pairwise z-score
  double trunc_T = 0.0;
  std::optional<double> tail_bound;
};

}  // namespace pdmpclt
