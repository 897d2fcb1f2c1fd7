#pragma once

#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <vector>

#include "pdmpclt/empirical.hpp"
#include "pdmpclt/model.hpp"
#include "pdmpclt/observable.hpp"
#include "pdmpclt/parallel.hpp"
#include "pdmpclt/statistics.hpp"

namespace pdmpclt {

// Fitted (H1) constants: d_FM(delta_x P(t), mu*) ~ kappa_hat (V(x)+1)^{1/2} e^{-gamma_hat t}.
// The constants are non-constructive in theory; these are fits and are
// flagged as such wherever they are reported.
struct ErgodicityEstimate {
  double gamma_hat = 0.0;
  double kappa_hat = 0.0;
  double fit_r2 = 0.0;
  bool no_signal = false;
  double noise_floor = 0.0;
  std::vector<double> probe_times;
  std::vector<double> distances;
};

struct CorrectorEstimate {
  HybridState x;
  double value = 0.0;
  double stat_err = 0.0;
  double trunc_T = 0.0;
  std::optional<double> tail_bound;  // ||g||_BL * kappa_hat (V(x)+1)^{1/2} e^{-gamma_hat T} / gamma_hat
};

// Corrector evaluator: value with its statistical error. Closed forms report
// zero error; Monte-Carlo evaluators report the standard error of the mean.
using ChiFn = std::function<MeanEstimate(const HybridState&)>;

struct CorrectorOptions {
  double trunc_T = 20.0;
  double t_grid_step = 0.25;
  std::size_t n_rep = 1000;
  const ErgodicityEstimate* ergodicity = nullptr;  // enables the tail bound
  const WorkerPool* pool = nullptr;
};

// Integration grid for the corrector integrand: geometric refinement near 0
// (where the integrand varies fastest), then uniform steps up to trunc_T.
std::vector<double> corrector_grid(double trunc_T, double step);

// Time-average of g over [burn_in, horizon] along one long trajectory;
// standard error via batch means. Stores the result into g.
MeanEstimate estimate_mean_mu_star(const PdmpModel& model, Observable& g, double burn_in,
                                   double horizon, RngStream rng, int batches = 32,
                                   std::optional<HybridState> x0 = std::nullopt);

// States read off one long trajectory at times burn_in + k * spacing,
// uniform weights; the empirical stand-in for mu*.
EmpiricalMeasure sample_mu_star(const PdmpModel& model, std::size_t n, double burn_in,
                                double spacing, RngStream rng,
                                std::optional<HybridState> x0 = std::nullopt);

// chi_hat(x): ensemble estimate of integral_0^trunc_T P(t) g_bar(x) dt. Each
// replica contributes the trapezoid of g_bar along its own path, so the
// reported standard error accounts for the correlation across grid times.
CorrectorEstimate estimate_corrector(const PdmpModel& model, const Observable& g,
                                     const HybridState& x, const CorrectorOptions& options,
                                     RngStream rng);

// Monte-Carlo corrector with per-state memoization. Thread-safe; the stream
// for a state is derived from the state itself, so results do not depend on
// query order or worker count.
class CorrectorEvaluator {
 public:
  CorrectorEvaluator(const PdmpModel& model, const Observable& g, CorrectorOptions options,
                     RngStream base);

  MeanEstimate operator()(const HybridState& x) const;

  std::size_t cache_size() const;

 private:
  const PdmpModel& model_;
  const Observable& g_;
  CorrectorOptions options_;
  RngStream base_;
  mutable std::mutex mutex_;
  mutable std::map<std::pair<int, Vec>, MeanEstimate> cache_;
};

// Corrector tabulated on a per-regime uniform y-grid (1-d models), queried by
// linear interpolation. Built once, then evaluations are cheap and noise-free
// relative to each other; used by the ensemble-scale diagnostics.
class TabulatedCorrector {
 public:
  TabulatedCorrector(const PdmpModel& model, const Observable& g, double y_min, double y_max,
                     std::size_t knots, const CorrectorOptions& options, RngStream rng);

  MeanEstimate operator()(const HybridState& x) const;

  ChiFn as_fn() const {
    return [this](const HybridState& x) { return (*this)(x); };
  }

 private:
  double y_min_, dy_;
  std::size_t knots_;
  std::vector<std::vector<double>> values_;  // per regime
  std::vector<std::vector<double>> errs_;
};

}  // namespace pdmpclt
