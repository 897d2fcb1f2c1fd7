#include "pdmpclt/hypotheses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pdmpclt/empirical.hpp"
#include "pdmpclt/fm_distance.hpp"
#include "pdmpclt/trajectory.hpp"

namespace pdmpclt {

namespace {

constexpr double kRelTol = 1e-9;

double factorial(int m) {
  double f = 1.0;
  for (int k = 2; k <= m; ++k) f *= k;
  return f;
}

}  // namespace

HypothesisConstants HypothesisConstants::from_primaries(double M, double zeta, double L, double a,
                                                        double b, double lambda) {
  if (M < 0.0 || zeta < 0.0 || L <= 0.0 || a <= 0.0 || b < 0.0 || lambda <= 0.0)
    throw std::invalid_argument("hypothesis constants: primaries out of range");
  HypothesisConstants c;
  c.M = M;
  c.zeta = zeta;
  c.L = L;
  c.a = a;
  c.b = b;
  c.lambda = lambda;

  c.m = static_cast<int>(std::ceil(2.0 * zeta));
  c.eta = 2.0 * a * L * L;
  if (!(c.eta < 1.0))
    throw std::invalid_argument("hypothesis constants: balance condition 2 a L^2 < 1 fails");
  const double m_fact = factorial(c.m);
  c.D = 2.0 * a * M * M * m_fact + b;
  c.Gamma_lemma = (1.0 - c.eta) * lambda;
  const double lambda_pow_m = std::pow(lambda, -static_cast<double>(c.m));
  c.C_lemma = c.D / (1.0 - c.eta) * (1.0 + lambda_pow_m);
  c.A_prop = 2.0 * L * L;
  // sup_t (t^m + 1) e^{-lambda t}: evaluated in closed form at t = m/lambda
  // (the maximizer of t^m e^{-lambda t}) and at t = 0, no numeric search.
  auto f = [&](double t) {
    return (std::pow(t, static_cast<double>(c.m)) + 1.0) * std::exp(-lambda * t);
  };
  const double sup_term = std::max(f(0.0), c.m > 0 ? f(static_cast<double>(c.m) / lambda) : f(0.0));
  c.B_prop = 2.0 * (L * L * c.C_lemma + M * M * (m_fact * lambda_pow_m + 1.0) + M * M * sup_term);
  return c;
}

bool check_balance(const HypothesisConstants& constants) { return constants.eta < 1.0; }

S1Result check_s1(const PdmpModel& model, const std::vector<double>& t_grid, double claimed_M,
                  double claimed_zeta) {
  if (t_grid.empty()) throw std::invalid_argument("check_s1: empty t grid");
  S1Result res;
  res.pass = true;
  Vec out(static_cast<std::size_t>(model.dim));
  for (double t : t_grid) {
    if (!(t > 0.0)) throw std::invalid_argument("check_s1: grid entries must be positive");
    const double bound = claimed_M * std::pow(t, claimed_zeta);
    for (int i = 0; i < model.num_regimes; ++i) {
      model.flow(i, t, model.anchor, out);
      const double disp = model.rho_y(out, model.anchor);
      const double ratio = disp == 0.0 ? 0.0
                           : bound > 0.0
                               ? disp / bound
                               : std::numeric_limits<double>::infinity();
      res.worst_ratio = std::max(res.worst_ratio, ratio);
    }
  }
  res.pass = res.worst_ratio <= 1.0 + kRelTol;
  return res;
}

S2Result check_s2(const PdmpModel& model, const std::vector<double>& t_grid,
                  std::size_t pair_samples, RngStream rng, double claimed_L, double sample_range) {
  if (pair_samples == 0) throw std::invalid_argument("check_s2: pair_samples must be >= 1");
  if (t_grid.empty()) throw std::invalid_argument("check_s2: empty t grid");
  S2Result res;
  const auto dim = static_cast<std::size_t>(model.dim);
  Vec y1(dim), y2(dim), f1(dim), f2(dim);
  for (std::size_t s = 0; s < pair_samples; ++s) {
    for (std::size_t k = 0; k < dim; ++k) {
      y1[k] = rng.uniform(-sample_range, sample_range);
      y2[k] = rng.uniform(-sample_range, sample_range);
    }
    const double base = model.rho_y(y1, y2);
    if (base == 0.0) continue;  // degenerate pair
    for (double t : t_grid)
      for (int i = 0; i < model.num_regimes; ++i) {
        model.flow(i, t, y1, f1);
        model.flow(i, t, y2, f2);
        res.L_hat = std::max(res.L_hat, model.rho_y(f1, f2) / base);
      }
  }
  res.pass = res.L_hat <= claimed_L * (1.0 + kRelTol);
  return res;
}

J1Result check_j1(const PdmpModel& model, const std::vector<double>& y_grid, std::size_t n_mc,
                  RngStream rng, double claimed_a, double claimed_b) {
  if (n_mc < 1000) throw std::invalid_argument("check_j1: n_mc must be >= 1000");
  if (y_grid.empty()) throw std::invalid_argument("check_j1: empty y grid");
  if (model.dim != 1) throw std::invalid_argument("check_j1: scalar y grid needs a 1-d model");

  J1Result res;
  res.pass = true;
  res.worst_margin = std::numeric_limits<double>::infinity();
  std::vector<double> xs(y_grid.size()), es(y_grid.size());
  Vec y(1), out(1);
  std::vector<double> draws(n_mc);
  for (std::size_t j = 0; j < y_grid.size(); ++j) {
    y[0] = y_grid[j];
    RngStream stream = rng.split(j);
    for (std::size_t r = 0; r < n_mc; ++r) {
      model.jump_kernel(y, stream, out);
      const double v = model.rho_y(out, model.anchor);
      draws[r] = v * v;
    }
    const MeanEstimate est = mean_and_stderr(draws);
    const double v0 = model.rho_y(y, model.anchor);
    const double bound = claimed_a * v0 * v0 + claimed_b;
    const double margin = bound + 4.0 * est.std_err - est.value;
    res.worst_margin = std::min(res.worst_margin, margin);
    // relative epsilon keeps exact-equality cases (deterministic kernels,
    // zero Monte-Carlo variance) from failing on a rounding ulp
    if (margin < -kRelTol * std::max(1.0, bound)) res.pass = false;
    xs[j] = v0 * v0;
    es[j] = est.value;
  }
  if (y_grid.size() >= 2) {
    const LinearFit fit = linear_fit(xs, es);
    res.a_hat = fit.slope;
    res.b_hat = fit.intercept;
  } else {
    res.a_hat = claimed_a;
    res.b_hat = es[0] - claimed_a * xs[0];
  }
  return res;
}

DriftFit fit_drift(const PdmpModel& model, const std::vector<HybridState>& x_grid,
                   const std::vector<double>& t_grid, std::size_t n_rep, RngStream rng,
                   const WorkerPool* pool) {
  if (n_rep < 100) throw std::invalid_argument("fit_drift: n_rep must be >= 100");
  if (x_grid.empty() || t_grid.size() < 4)
    throw std::invalid_argument("fit_drift: need x grid and >= 4 t grid points");
  if (!std::is_sorted(t_grid.begin(), t_grid.end()))
    throw std::invalid_argument("fit_drift: t grid must be increasing");

  const std::size_t nx = x_grid.size();
  const std::size_t nt = t_grid.size();
  const std::size_t quartile_start = (3 * nt) / 4;

  // surface[xi][tj]: Monte-Carlo P(t)V^2(x); plateau per replica for B_hat.
  std::vector<std::vector<MeanEstimate>> surface(nx, std::vector<MeanEstimate>(nt));
  std::vector<MeanEstimate> plateau(nx);

  for (std::size_t xi = 0; xi < nx; ++xi) {
    std::vector<double> slots(n_rep * nt);
    std::vector<double> plateau_slots(n_rep);
    RngStream base = rng.split(xi);
    auto run = [&](std::size_t r) {
      PathWalker walker(model, x_grid[xi], base.split(r));
      for (std::size_t tj = 0; tj < nt; ++tj) {
        const double v = model.lyapunov(walker.state_at(t_grid[tj]));
        slots[r * nt + tj] = v * v;
      }
      double acc = 0.0;
      for (std::size_t tj = quartile_start; tj < nt; ++tj) acc += slots[r * nt + tj];
      plateau_slots[r] = acc / static_cast<double>(nt - quartile_start);
    };
    if (pool != nullptr)
      pool->parallel_for(n_rep, run);
    else
      for (std::size_t r = 0; r < n_rep; ++r) run(r);

    std::vector<double> column(n_rep);
    for (std::size_t tj = 0; tj < nt; ++tj) {
      for (std::size_t r = 0; r < n_rep; ++r) column[r] = slots[r * nt + tj];
      surface[xi][tj] = mean_and_stderr(column);
    }
    plateau[xi] = mean_and_stderr(plateau_slots);
  }

  DriftFit fit;
  std::size_t worst_xi = 0;
  for (std::size_t xi = 0; xi < nx; ++xi)
    if (plateau[xi].value > plateau[worst_xi].value) worst_xi = xi;
  fit.B_hat = std::max(0.0, plateau[worst_xi].value);
  fit.B_hat_stderr = plateau[worst_xi].std_err;
  for (std::size_t xi = 0; xi < nx; ++xi)
    for (std::size_t tj = 0; tj < nt; ++tj)
      fit.surface_noise = std::max(fit.surface_noise, surface[xi][tj].std_err);

  // Pooled log-linear decay of the plateau-corrected surface over the points
  // with a clear signal.
  std::vector<double> ts, logs;
  for (std::size_t xi = 0; xi < nx; ++xi) {
    const double v = model.lyapunov(x_grid[xi]);
    if (v <= 0.0) continue;
    for (std::size_t tj = 0; tj < nt; ++tj) {
      const double excess = surface[xi][tj].value - fit.B_hat;
      if (excess <= std::max(4.0 * surface[xi][tj].std_err, 1e-300)) continue;
      ts.push_back(t_grid[tj]);
      logs.push_back(std::log(excess / (v * v)));
    }
  }
  if (ts.size() < 3) {
    fit.degenerate = true;
    fit.pass = false;
    return fit;
  }
  const LinearFit lf = linear_fit(ts, logs);
  fit.Gamma_hat = -lf.slope;
  if (!(fit.Gamma_hat > 0.0)) {
    fit.degenerate = true;
    fit.pass = false;
    return fit;
  }
  // Envelope intercept: smallest A_hat that covers every fitted point.
  double log_a = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < ts.size(); ++k) log_a = std::max(log_a, logs[k] + fit.Gamma_hat * ts[k]);
  fit.A_hat = std::exp(log_a);

  // Worst relative violation of the certified bound with the 4-stderr allowance.
  for (std::size_t xi = 0; xi < nx; ++xi) {
    const double v = model.lyapunov(x_grid[xi]);
    for (std::size_t tj = 0; tj < nt; ++tj) {
      const double bound = fit.A_hat * std::exp(-fit.Gamma_hat * t_grid[tj]) * v * v + fit.B_hat;
      const double excess = surface[xi][tj].value - 4.0 * surface[xi][tj].std_err - bound;
      if (excess > 0.0)
        fit.residual_max = std::max(fit.residual_max, excess / std::max(bound, 1e-300));
    }
  }
  fit.pass = fit.residual_max <= 0.05;
  return fit;
}

GenlapResult check_genlap(const PdmpModel& model, const HypothesisConstants& constants,
                          const std::vector<HybridState>& x_grid, const std::vector<double>& t0_grid,
                          std::size_t n_rep, RngStream rng, const WorkerPool* pool) {
  if (x_grid.empty() || t0_grid.empty())
    throw std::invalid_argument("check_genlap: empty probe grid");
  if (n_rep == 0) throw std::invalid_argument("check_genlap: n_rep must be >= 1");

  GenlapResult result;
  result.pass = true;
  std::size_t cell = 0;
  for (const HybridState& x : x_grid)
    for (double t0 : t0_grid) {
      if (t0 < 0.0) throw std::invalid_argument("check_genlap: t0 must be nonnegative");
      RngStream base = rng.split(cell++);
      const double v0 = model.lyapunov(x);
      std::vector<double> slots(n_rep);
      auto run = [&](std::size_t r) {
        RngStream stream = base.split(r);
        double series = std::exp(-model.lambda * t0) * v0 * v0;
        double tau = 0.0;
        HybridState state = x;
        while (true) {
          auto [delta, next] = step_embedded(model, state, stream);
          tau += delta;
          if (tau > t0) break;
          const double v = model.lyapunov(next);
          series += std::exp(-model.lambda * (t0 - tau)) * v * v;
          state = std::move(next);
        }
        slots[r] = series;
      };
      if (pool != nullptr)
        pool->parallel_for(n_rep, run);
      else
        for (std::size_t r = 0; r < n_rep; ++r) run(r);

      GenlapRow row;
      row.x = x;
      row.t0 = t0;
      const MeanEstimate est = mean_and_stderr(slots);
      row.estimate = est.value;
      row.std_err = est.std_err;
      row.bound = std::exp(-constants.Gamma_lemma * t0) * v0 * v0 + constants.C_lemma;
      row.margin = row.bound + 4.0 * est.std_err - est.value;
      row.pass = row.margin >= 0.0;
      result.pass = result.pass && row.pass;
      result.rows.push_back(std::move(row));
    }
  return result;
}

ErgodicityEstimate probe_ergodicity(const PdmpModel& model, const HybridState& init_a,
                                    const HybridState& init_b, const std::vector<double>& t_grid,
                                    std::size_t ensemble, std::size_t fm_subsample, RngStream rng,
                                    const WorkerPool* pool) {
  if (ensemble < 100) throw std::invalid_argument("probe_ergodicity: ensemble must be >= 100");
  if (fm_subsample < 2) throw std::invalid_argument("probe_ergodicity: fm_subsample must be >= 2");
  if (t_grid.size() < 2 || !std::is_sorted(t_grid.begin(), t_grid.end()))
    throw std::invalid_argument("probe_ergodicity: need an increasing t grid");

  const std::size_t nt = t_grid.size();
  // states[which][t][replica]
  std::vector<std::vector<std::vector<HybridState>>> states(
      2, std::vector<std::vector<HybridState>>(nt, std::vector<HybridState>(ensemble)));
  for (int which = 0; which < 2; ++which) {
    const HybridState& x0 = which == 0 ? init_a : init_b;
    RngStream base = rng.split(static_cast<std::uint64_t>(which));
    auto run = [&](std::size_t r) {
      PathWalker walker(model, x0, base.split(r));
      for (std::size_t tj = 0; tj < nt; ++tj)
        states[static_cast<std::size_t>(which)][tj][r] = to_state(walker.state_at(t_grid[tj]));
    };
    if (pool != nullptr)
      pool->parallel_for(ensemble, run);
    else
      for (std::size_t r = 0; r < ensemble; ++r) run(r);
  }

  ErgodicityEstimate out;
  out.probe_times = t_grid;
  out.distances.resize(nt);
  std::vector<double> floors(nt);
  RngStream sub_rng = rng.split(0x666d737562ull);
  const std::size_t half = ensemble / 2;
  for (std::size_t tj = 0; tj < nt; ++tj) {
    auto law_a = EmpiricalMeasure::uniform(states[0][tj]);
    auto law_b = EmpiricalMeasure::uniform(states[1][tj]);
    RngStream r1 = sub_rng.split(4 * tj), r2 = sub_rng.split(4 * tj + 1);
    out.distances[tj] =
        fm_distance(subsample(law_a, fm_subsample, r1), subsample(law_b, fm_subsample, r2), model.metric);

    // Same-law noise floor: disjoint halves of the a-ensemble.
    auto half_a = EmpiricalMeasure::uniform(
        std::vector<HybridState>(states[0][tj].begin(), states[0][tj].begin() + static_cast<std::ptrdiff_t>(half)));
    auto half_b = EmpiricalMeasure::uniform(
        std::vector<HybridState>(states[0][tj].begin() + static_cast<std::ptrdiff_t>(half), states[0][tj].end()));
    RngStream r3 = sub_rng.split(4 * tj + 2), r4 = sub_rng.split(4 * tj + 3);
    floors[tj] = fm_distance(subsample(half_a, fm_subsample, r3), subsample(half_b, fm_subsample, r4),
                             model.metric);
  }
  out.noise_floor = sample_mean(floors);

  // Fit window: the leading run of grid points whose signal clears twice the
  // per-time noise floor. Points saturated toward the metric cap of 2 are
  // pre-asymptotic and skipped (log-linearity only holds once d << 2).
  std::vector<double> ts, logs;
  for (std::size_t tj = 0; tj < nt; ++tj) {
    if (out.distances[tj] > 1.5) continue;
    if (out.distances[tj] < 2.0 * floors[tj] || out.distances[tj] <= 0.0) break;
    ts.push_back(t_grid[tj]);
    logs.push_back(std::log(out.distances[tj]));
  }
  if (ts.size() < 2) {
    out.no_signal = true;
    return out;
  }
  const LinearFit fit = linear_fit(ts, logs);
  out.gamma_hat = -fit.slope;
  out.fit_r2 = fit.r2;
  const double scale =
      std::sqrt(std::max(model.lyapunov(init_a), model.lyapunov(init_b)) + 1.0);
  out.kappa_hat = std::exp(fit.intercept) / scale;
  if (!(out.gamma_hat > 0.0)) out.no_signal = true;
  return out;
}

}  // namespace pdmpclt
