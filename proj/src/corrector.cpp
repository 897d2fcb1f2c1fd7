#include "pdmpclt/corrector.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "pdmpclt/trajectory.hpp"

namespace pdmpclt {

std::vector<double> corrector_grid(double trunc_T, double step) {
  if (trunc_T <= 0.0 || step <= 0.0)
    throw std::invalid_argument("corrector_grid: trunc_T and step must be positive");
  std::vector<double> ts{0.0};
  double h = step / 16.0;
  double t = 0.0;
  while (t < trunc_T) {
    t = std::min(t + h, trunc_T);
    ts.push_back(t);
    h = std::min(2.0 * h, step);
  }
  return ts;
}

MeanEstimate estimate_mean_mu_star(const PdmpModel& model, Observable& g, double burn_in,
                                   double horizon, RngStream rng, int batches,
                                   std::optional<HybridState> x0) {
  if (batches < 2) throw std::invalid_argument("estimate_mean_mu_star: need >= 2 batches");
  if (!(horizon > burn_in))
    throw std::invalid_argument("estimate_mean_mu_star: horizon too short for requested batches");
  const double span = horizon - burn_in;
  const double batch_len = span / batches;
  if (!(batch_len > 0.0))
    throw std::invalid_argument("estimate_mean_mu_star: horizon too short for requested batches");

  const HybridState start = x0.value_or(model.anchor_state());
  PathWalker walker(model, start, rng);
  auto eval = [&g](const StateView& x) { return g(x); };
  walker.integrate_to(burn_in, eval);  // burn-in discarded

  std::vector<double> batch_means(static_cast<std::size_t>(batches));
  for (int b = 0; b < batches; ++b) {
    const double end = b + 1 == batches ? horizon : burn_in + batch_len * (b + 1);
    const double len = end - (burn_in + batch_len * b);
    batch_means[static_cast<std::size_t>(b)] = walker.integrate_to(end, eval) / len;
  }
  const double value = pairwise_sum(batch_means) / batches;
  double var = 0.0;
  for (double m : batch_means) var += (m - value) * (m - value);
  var /= (batches - 1);
  MeanEstimate est{value, std::sqrt(var / batches)};
  g.set_mean_under_mu_star(est.value);
  return est;
}

EmpiricalMeasure sample_mu_star(const PdmpModel& model, std::size_t n, double burn_in,
                                double spacing, RngStream rng, std::optional<HybridState> x0) {
  if (n == 0) throw std::invalid_argument("sample_mu_star: n must be >= 1");
  if (spacing <= 0.0) throw std::invalid_argument("sample_mu_star: spacing must be positive");
  const HybridState start = x0.value_or(model.anchor_state());
  PathWalker walker(model, start, rng);
  std::vector<HybridState> pts;
  pts.reserve(n);
  for (std::size_t k = 0; k < n; ++k)
    pts.push_back(to_state(walker.state_at(burn_in + spacing * static_cast<double>(k))));
  return EmpiricalMeasure::uniform(std::move(pts));
}

CorrectorEstimate estimate_corrector(const PdmpModel& model, const Observable& g,
                                     const HybridState& x, const CorrectorOptions& options,
                                     RngStream rng) {
  if (!g.has_mean())
    throw std::logic_error("estimate_corrector: observable is missing mean_under_mu_star");
  if (options.n_rep == 0) throw std::invalid_argument("estimate_corrector: n_rep must be >= 1");
  const std::vector<double> grid = corrector_grid(options.trunc_T, options.t_grid_step);

  std::vector<double> integrals(options.n_rep);
  auto run_replica = [&](std::size_t r) {
    PathWalker walker(model, x, rng.split(r));
    double prev = g.centered(walker.state_at(grid.front()));
    double acc = 0.0;
    for (std::size_t j = 1; j < grid.size(); ++j) {
      const double cur = g.centered(walker.state_at(grid[j]));
      acc += 0.5 * (prev + cur) * (grid[j] - grid[j - 1]);
      prev = cur;
    }
    integrals[r] = acc;
  };
  if (options.pool != nullptr)
    options.pool->parallel_for(options.n_rep, run_replica);
  else
    for (std::size_t r = 0; r < options.n_rep; ++r) run_replica(r);

  const MeanEstimate est = mean_and_stderr(integrals);
  CorrectorEstimate out;
  out.x = x;
  out.value = est.value;
  out.stat_err = est.std_err;
  out.trunc_T = options.trunc_T;
  if (options.ergodicity != nullptr && !options.ergodicity->no_signal &&
      options.ergodicity->gamma_hat > 0.0) {
    const auto& erg = *options.ergodicity;
    const double c_bar = erg.kappa_hat * std::sqrt(model.lyapunov(x) + 1.0);
    out.tail_bound = g.bl_norm() * c_bar * std::exp(-erg.gamma_hat * options.trunc_T) / erg.gamma_hat;
  }
  return out;
}

CorrectorEvaluator::CorrectorEvaluator(const PdmpModel& model, const Observable& g,
                                       CorrectorOptions options, RngStream base)
    : model_(model), g_(g), options_(std::move(options)), base_(base) {
  if (!g.has_mean())
    throw std::logic_error("CorrectorEvaluator: observable is missing mean_under_mu_star");
}

MeanEstimate CorrectorEvaluator::operator()(const HybridState& x) const {
  const std::pair<int, Vec> key{x.regime, x.y};
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }
  // Stream keyed by the state bits: results are independent of query order.
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 0x100000001b3ull;
  };
  mix(static_cast<std::uint64_t>(x.regime));
  for (double c : x.y) {
    std::uint64_t bits;
    std::memcpy(&bits, &c, sizeof(bits));
    mix(bits);
  }
  CorrectorOptions local = options_;
  local.pool = nullptr;  // the caller parallelizes over states, not replicas
  const CorrectorEstimate est = estimate_corrector(model_, g_, x, local, base_.split(h));
  const MeanEstimate result{est.value, est.stat_err};
  std::lock_guard<std::mutex> lock(mutex_);
  cache_.emplace(key, result);
  return result;
}

std::size_t CorrectorEvaluator::cache_size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return cache_.size();
}

TabulatedCorrector::TabulatedCorrector(const PdmpModel& model, const Observable& g, double y_min,
                                       double y_max, std::size_t knots,
                                       const CorrectorOptions& options, RngStream rng) {
  if (model.dim != 1) throw std::invalid_argument("TabulatedCorrector: 1-d models only");
  if (knots < 2 || !(y_max > y_min)) throw std::invalid_argument("TabulatedCorrector: bad grid");
  y_min_ = y_min;
  knots_ = knots;
  dy_ = (y_max - y_min) / static_cast<double>(knots - 1);
  values_.assign(static_cast<std::size_t>(model.num_regimes), std::vector<double>(knots));
  errs_ = values_;

  CorrectorOptions local = options;
  local.pool = nullptr;
  const std::size_t total = static_cast<std::size_t>(model.num_regimes) * knots;
  auto build_one = [&](std::size_t idx) {
    const auto regime = static_cast<int>(idx / knots);
    const std::size_t j = idx % knots;
    HybridState x{{y_min_ + dy_ * static_cast<double>(j)}, regime};
    const CorrectorEstimate est = estimate_corrector(model, g, x, local, rng.split(idx));
    values_[static_cast<std::size_t>(regime)][j] = est.value;
    errs_[static_cast<std::size_t>(regime)][j] = est.stat_err;
  };
  if (options.pool != nullptr)
    options.pool->parallel_for(total, build_one);
  else
    for (std::size_t i = 0; i < total; ++i) build_one(i);
}

MeanEstimate TabulatedCorrector::operator()(const HybridState& x) const {
  const auto& vals = values_[static_cast<std::size_t>(x.regime)];
  const auto& errs = errs_[static_cast<std::size_t>(x.regime)];
  const double pos = (x.y[0] - y_min_) / dy_;
  // Linear interpolation inside the grid, linear extrapolation from the edge
  // cells outside it.
  const double clamped = std::clamp(pos, 0.0, static_cast<double>(knots_ - 1) - 1e-12);
  const auto j = static_cast<std::size_t>(clamped);
  const double w = pos - static_cast<double>(j);
  const double value = vals[j] + w * (vals[j + 1] - vals[j]);
  const double err = std::abs(errs[j] + std::clamp(w, 0.0, 1.0) * (errs[j + 1] - errs[j]));
  return {value, err};
}

}  // namespace pdmpclt
