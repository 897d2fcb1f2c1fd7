#pragma once

#include <cstddef>
#include <vector>

#include "pdmpclt/corrector.hpp"
#include "pdmpclt/model.hpp"
#include "pdmpclt/parallel.hpp"
#include "pdmpclt/rng.hpp"
#include "pdmpclt/statistics.hpp"

namespace pdmpclt {

// Primary growth constants together with everything derived from them:
//   m = ceil(2 zeta), eta = 2 a L^2, D = 2 a M^2 m! + b,
//   Gamma_lemma = (1 - eta) lambda, C_lemma = D (1-eta)^{-1} (1 + lambda^{-m}),
//   A_prop = 2 L^2,
//   B_prop = 2 (L^2 C_lemma + M^2 (m! lambda^{-m} + 1) + M^2 sup_t (t^m+1) e^{-lambda t}).
// Construction fails loudly when eta >= 1 (the balance condition).
struct HypothesisConstants {
  double M = 0.0;
  double zeta = 0.0;
  double L = 1.0;
  double a = 0.0;
  double b = 0.0;
  double lambda = 1.0;

  int m = 0;
  double eta = 0.0;
  double D = 0.0;
  double Gamma_lemma = 0.0;
  double C_lemma = 0.0;
  double A_prop = 0.0;
  double B_prop = 0.0;

  static HypothesisConstants from_primaries(double M, double zeta, double L, double a, double b,
                                            double lambda);
};

bool check_balance(const HypothesisConstants& constants);

struct S1Result {
  bool pass = false;
  double worst_ratio = 0.0;
};

// Displacement bound of the anchor: max_i rho_Y(S_i(t, y*), y*) <= M t^zeta on
// the grid (the bound degenerates to the constant M when zeta = 0).
// Deterministic; semiflows are deterministic maps.
S1Result check_s1(const PdmpModel& model, const std::vector<double>& t_grid, double claimed_M,
                  double claimed_zeta);

struct S2Result {
  bool pass = false;
  double L_hat = 0.0;
};

// Uniform-in-time Lipschitz bound of the semiflows over sampled pairs.
S2Result check_s2(const PdmpModel& model, const std::vector<double>& t_grid,
                  std::size_t pair_samples, RngStream rng, double claimed_L,
                  double sample_range = 5.0);

struct J1Result {
  bool pass = false;
  double a_hat = 0.0;
  double b_hat = 0.0;
  double worst_margin = 0.0;  // most negative slack of the 4-stderr-allowed bound
};

// Second-moment contraction of the jump kernel: Monte-Carlo estimate of
// E rho_Y^2(Y', y*) under J(y, .) on a grid of y values.
J1Result check_j1(const PdmpModel& model, const std::vector<double>& y_grid, std::size_t n_mc,
                  RngStream rng, double claimed_a, double claimed_b);

struct DriftFit {
  double A_hat = 0.0;
  double Gamma_hat = 0.0;
  double B_hat = 0.0;
  double B_hat_stderr = 0.0;   // standard error of the winning plateau mean
  double surface_noise = 0.0;  // worst Monte-Carlo stderr across the probe surface
  double residual_max = 0.0;
  bool degenerate = false;
  bool pass = false;
};

// Monte-Carlo surface P(t)V^2(x) over the probe grids. B_hat is the worst
// plateau (top-quartile-of-t mean); Gamma_hat is the pooled log-linear decay
// of the plateau-corrected surface; A_hat is the envelope intercept, so the
// fitted triple certifies the bound on the probe grid.
DriftFit fit_drift(const PdmpModel& model, const std::vector<HybridState>& x_grid,
                   const std::vector<double>& t_grid, std::size_t n_rep, RngStream rng,
                   const WorkerPool* pool = nullptr);

struct GenlapRow {
  HybridState x;
  double t0 = 0.0;
  double estimate = 0.0;
  double std_err = 0.0;
  double bound = 0.0;
  double margin = 0.0;  // bound + 4 stderr - estimate
  bool pass = false;
};

struct GenlapResult {
  bool pass = false;
  std::vector<GenlapRow> rows;
};

// Monte-Carlo check of the weighted embedded-chain series
//   E_x sum_n e^{-lambda (t0 - tau_n)} V^2(Phi_n) 1{tau_n <= t0}
// against e^{-Gamma_lemma t0} V^2(x) + C_lemma.
GenlapResult check_genlap(const PdmpModel& model, const HypothesisConstants& constants,
                          const std::vector<HybridState>& x_grid, const std::vector<double>& t0_grid,
                          std::size_t n_rep, RngStream rng, const WorkerPool* pool = nullptr);

// Law-distance decay probe: empirical laws of the process from two starts,
// FM distance at each grid time, log-linear fit over the window where the
// signal clears twice the subsampling noise floor.
ErgodicityEstimate probe_ergodicity(const PdmpModel& model, const HybridState& init_a,
                                    const HybridState& init_b, const std::vector<double>& t_grid,
                                    std::size_t ensemble, std::size_t fm_subsample, RngStream rng,
                                    const WorkerPool* pool = nullptr);

}  // namespace pdmpclt
