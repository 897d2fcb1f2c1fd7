#include "pdmpclt/martingale.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pdmpclt {

MartingaleDecomposition decompose(const Trajectory& traj, const PdmpModel& model,
                                  const Observable& g, const ChiFn& chi, double grid_step) {
  if (traj.horizon < 1.0) throw std::invalid_argument("decompose: trajectory horizon must be >= 1");
  if (grid_step <= 0.0) throw std::invalid_argument("decompose: grid_step must be positive");

  MartingaleDecomposition d;
  d.horizon = traj.horizon;

  auto gbar = [&g](const StateView& x) { return g.centered(x); };
  const double chi0 = chi(traj.x0).value;
  d.chi_start = chi0;

  // M on the uniform grid.
  double t = 0.0;
  double integral = 0.0;
  d.grid_t.push_back(0.0);
  d.m_path.push_back(0.0);
  while (t < traj.horizon) {
    const double next = std::min(t + grid_step, traj.horizon);
    integral += path_integral(traj, model, gbar, t, next).value;
    t = next;
    d.grid_t.push_back(t);
    d.m_path.push_back(chi(eval_at(traj, model, t)).value - chi0 + integral);
  }
  d.integral_horizon = integral;
  d.chi_end = chi(eval_at(traj, model, traj.horizon)).value;
  d.r_horizon = (chi0 - d.chi_end) / std::sqrt(traj.horizon);

  // Z at integer times.
  const auto n_inc = static_cast<std::size_t>(std::floor(traj.horizon));
  d.z.assign(n_inc + 1, 0.0);
  d.qv.assign(n_inc + 1, 0.0);
  double chi_prev = chi0;
  double m_prev = 0.0;
  for (std::size_t n = 1; n <= n_inc; ++n) {
    const double tn = static_cast<double>(n);
    const double chi_n = chi(eval_at(traj, model, tn)).value;
    const double inc = path_integral(traj, model, gbar, tn - 1.0, tn).value;
    const double m_n = m_prev + (chi_n - chi_prev) + inc;
    d.z[n] = m_n - m_prev;
    d.qv[n] = d.qv[n - 1] + d.z[n] * d.z[n];
    m_prev = m_n;
    chi_prev = chi_n;
  }
  return d;
}

MeanEstimate sigma2_martingale(const PdmpModel& model, const Observable& g, const ChiFn& chi,
                               const EmpiricalMeasure& mu_star, std::size_t n_rep, RngStream rng,
                               const WorkerPool* pool) {
  if (mu_star.size() == 0) throw std::invalid_argument("sigma2_martingale: empty mu_star");
  if (n_rep == 0) throw std::invalid_argument("sigma2_martingale: n_rep must be >= 1");

  std::vector<double> cum(mu_star.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < mu_star.size(); ++k) {
    acc += mu_star.weights[k];
    cum[k] = acc;
  }

  std::vector<double> slots(n_rep);
  auto run = [&](std::size_t r) {
    RngStream stream = rng.split(r);
    const double u = stream.uniform01() * acc;
    const auto it = std::lower_bound(cum.begin(), cum.end(), u);
    const auto idx =
        std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()), mu_star.size() - 1);
    const HybridState& x0 = mu_star.points[idx];

    PathWalker walker(model, x0, stream.split(0x70617468ull));
    const double integral =
        walker.integrate_to(1.0, [&g](const StateView& x) { return g.centered(x); });
    const HybridState x1 = to_state(walker.state_at(1.0));

    const MeanEstimate chi0 = chi(x0);
    const MeanEstimate chi1 = chi(x1);
    const double z1 = chi1.value - chi0.value + integral;
    // Measurement-error correction: the chi noise enters Z(1)^2 additively in
    // expectation, so its estimated variance is subtracted per sample.
    slots[r] = z1 * z1 - chi0.std_err * chi0.std_err - chi1.std_err * chi1.std_err;
  };
  if (pool != nullptr)
    pool->parallel_for(n_rep, run);
  else
    for (std::size_t r = 0; r < n_rep; ++r) run(r);

  return mean_and_stderr(slots);
}

MeanEstimate sigma2_green(const Observable& g, const std::vector<MeanEstimate>& chi_values,
                          const EmpiricalMeasure& mu_star) {
  if (chi_values.size() != mu_star.size())
    throw std::invalid_argument("sigma2_green: chi table misaligned with mu_star support");
  if (mu_star.size() == 0) throw std::invalid_argument("sigma2_green: empty mu_star");

  std::vector<double> terms(mu_star.size());
  for (std::size_t k = 0; k < mu_star.size(); ++k)
    terms[k] = 2.0 * mu_star.weights[k] * chi_values[k].value * g.centered(mu_star.points[k]);
  const double value = pairwise_sum(terms);

  // Delta method: chi noise propagated through the linear form, plus the
  // weighted sampling variability of the support itself.
  double var_chi = 0.0, var_support = 0.0;
  for (std::size_t k = 0; k < mu_star.size(); ++k) {
    const double coeff = 2.0 * mu_star.weights[k] * g.centered(mu_star.points[k]);
    var_chi += coeff * coeff * chi_values[k].std_err * chi_values[k].std_err;
    const double h_k = mu_star.weights[k] == 0.0 ? 0.0 : terms[k] / mu_star.weights[k];
    var_support += mu_star.weights[k] * mu_star.weights[k] * (h_k - value) * (h_k - value);
  }
  return {value, std::sqrt(var_chi + var_support)};
}

MeanEstimate qv_slope(const std::vector<MartingaleDecomposition>& decomps, std::size_t n_max) {
  if (decomps.empty()) throw std::invalid_argument("qv_slope: no decompositions");
  if (n_max < 2) throw std::invalid_argument("qv_slope: n_max must be >= 2");
  std::vector<double> ns(n_max);
  for (std::size_t n = 0; n < n_max; ++n) ns[n] = static_cast<double>(n + 1);

  std::vector<double> slopes(decomps.size());
  for (std::size_t r = 0; r < decomps.size(); ++r) {
    const auto& d = decomps[r];
    if (d.increments() < n_max)
      throw std::invalid_argument("qv_slope: decomposition has too few increments");
    std::vector<double> q(d.qv.begin() + 1, d.qv.begin() + 1 + static_cast<std::ptrdiff_t>(n_max));
    slopes[r] = linear_fit(ns, q).slope;
  }
  // The per-replica regression is linear in the data, so the mean of slopes
  // equals the slope of the ensemble-mean curve.
  return mean_and_stderr(slopes);
}

}  // namespace pdmpclt
