#pragma once

#include <cstddef>
#include <variant>
#include <vector>

#include "pdmpclt/empirical.hpp"
#include "pdmpclt/martingale.hpp"
#include "pdmpclt/model.hpp"
#include "pdmpclt/observable.hpp"
#include "pdmpclt/parallel.hpp"

namespace pdmpclt {

// Distribution function of the centered normal law with standard deviation
// sigma; sigma = 0 degenerates to the Dirac step at 0 (right-continuous).
// Uses a rational erfc approximation with relative error < 1.2e-7.
double normal_cdf(double u, double sigma);

using InitialLaw = std::variant<HybridState, EmpiricalMeasure>;

// n_rep independent replicas of the statistic t^{-1/2} integral_0^t g_bar.
// Initial laws are restricted to point masses and finite mixtures.
std::vector<double> clt_samples(const PdmpModel& model, const Observable& g, const InitialLaw& init,
                                double t, std::size_t n_rep, RngStream rng,
                                const WorkerPool* pool = nullptr);

struct KsResult {
  double ks_stat = 0.0;
  double threshold = 0.0;
  bool pass = false;
  bool degenerate = false;       // sigma2_ref = 0 concentration branch
  double dirac_quantile = 0.0;   // 0.99-quantile of |samples| in that branch
};

// One-sample Kolmogorov-Smirnov test against Phi_sigma at level alpha
// (0.05 or 0.01; asymptotic thresholds 1.358/sqrt(n) and 1.628/sqrt(n)).
// For sigma2_ref = 0 the test degenerates to a concentration check: the
// 0.99-quantile of |samples| must not exceed eps_dirac, and ks_stat reports
// the exceedance fraction.
KsResult ks_test(const std::vector<double>& samples, double sigma2_ref, double alpha,
                 double eps_dirac = 0.1);

struct LindebergProfile {
  std::vector<double> eps;
  std::vector<std::size_t> n;
  // value[e][k]: ensemble estimate of n^{-1} sum_{i<n} E[Z(i+1)^2 1{|Z(i+1)| >= eps sqrt n}]
  std::vector<std::vector<MeanEstimate>> value;
};

LindebergProfile lindeberg_profile(const std::vector<MartingaleDecomposition>& decomps,
                                   const std::vector<double>& eps_list,
                                   const std::vector<std::size_t>& n_list = {32, 128, 512});

struct VariancePlateau {
  std::vector<std::size_t> n;
  std::vector<MeanEstimate> value;  // ensemble mean of Z(n)^2
  double max_value = 0.0;
  double tail_slope = 0.0;
  double tail_slope_stderr = 0.0;
  bool trend_free = false;  // no upward trend over the last half
};

VariancePlateau variance_plateau(const std::vector<MartingaleDecomposition>& decomps,
                                 std::size_t n_max);

struct CltReport {
  double t = 0.0;
  std::size_t n_rep = 0;
  std::vector<double> samples;
  double sample_mean = 0.0;
  double sample_var = 0.0;
  MeanEstimate sigma2_ref;
  KsResult ks;
  bool mean_ok = false;  // |sample_mean| <= 4 sqrt(sample_var / n_rep)
  bool pass = false;
};

CltReport make_clt_report(const PdmpModel& model, const Observable& g, const InitialLaw& init,
                          double t, std::size_t n_rep, const MeanEstimate& sigma2_ref, double alpha,
                          RngStream rng, const WorkerPool* pool = nullptr, double eps_dirac = 0.1);

}  // namespace pdmpclt
