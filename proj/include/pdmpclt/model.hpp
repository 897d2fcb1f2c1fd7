#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pdmpclt/rng.hpp"
#include "pdmpclt/state.hpp"

namespace pdmpclt {

// S_i(t, y) -> out; semiflow law S_i(s, S_i(t,y)) = S_i(s+t, y), S_i(0,y) = y.
using SemiflowFn = std::function<void(double t, std::span<const double> y, std::span<double> out)>;

// Draw y' ~ J(y, .). Kernels are exposed as samplers only; expectations are
// always Monte-Carlo.
using JumpSamplerFn = std::function<void(std::span<const double> y, RngStream& rng, std::span<double> out)>;

// Growth/contraction constants the builtin models certify for their own
// semiflows and jump kernels; consumed by the hypothesis checkers.
struct ClaimedBounds {
  double M = 0.0;      // max_i rho_Y(S_i(t,y*), y*) <= M t^zeta
  double zeta = 0.0;
  double L = 1.0;      // rho_Y(S_i(t,y1), S_i(t,y2)) <= L rho_Y(y1,y2)
  double a = 0.0;      // E rho_Y^2(Y', y*) <= a rho_Y^2(y,y*) + b under J(y,.)
  double b = 0.0;
};

// Complete description of the switched-semiflow jump process: jump rate,
// routing matrix, per-regime semiflows, jump kernel, hybrid metric, anchor.
// Immutable after construction; safe to share across workers (all randomness
// flows through explicitly passed streams).
struct PdmpModel {
  std::string name;
  int dim = 1;
  int num_regimes = 1;
  double lambda = 1.0;
  std::vector<std::vector<double>> routing;  // row-stochastic
  std::vector<SemiflowFn> semiflows;
  JumpSamplerFn jump_kernel;
  HybridMetric metric;
  Vec anchor;  // y*

  std::optional<ClaimedBounds> claimed;
  std::vector<std::string> warnings;  // parameter choices that break a hypothesis precondition
  std::map<std::string, double> params;  // resolved scalar parameters, for manifests

  void flow(int regime, double t, std::span<const double> y, std::span<double> out) const {
    semiflows[static_cast<std::size_t>(regime)](t, y, out);
  }

  double rho_y(std::span<const double> a, std::span<const double> b) const {
    return metric.rho_y(a, b);
  }

  // V(x) = rho_Y(y, y*).
  double lyapunov(std::span<const double> y) const { return metric.rho_y(y, anchor); }
  double lyapunov(const StateView& x) const { return lyapunov(x.y); }

  HybridState anchor_state(int regime = 0) const { return HybridState{anchor, regime}; }

  // Structural checks: row sums, positivity, semiflow identity/composition
  // law on random probes. Throws std::invalid_argument on violation.
  void validate(RngStream rng) const;
};

// Instantiate a builtin model, applying key -> value overrides.
//   "contract-multijump": one regime, S(t,y)=e^{-alpha t} y, J = delta_{kappa y};
//                         overrides: alpha, kappa, lambda, metric_c.
//   "two-regime-ou":      two regimes, S_i(t,y)=c_i+e^{-alpha_i t}(y-c_i),
//                         y' = kappa y + Uniform[-beta,beta];
//                         overrides: alpha0, alpha1, c0, c1, kappa, beta,
//                                    lambda, p, q, metric_c.
// Unknown model names and unknown override keys throw; parameter choices that
// merely violate a hypothesis precondition only set a warning flag.
PdmpModel builtin_model(const std::string& name, const std::map<std::string, double>& overrides = {});

// Custom affine-semiflow model (the config-file route): per-regime (alpha_i, c_i),
// routing matrix, and a jump spec of type "affine-uniform" {kappa, beta} or
// "dirac-scale" {kappa}.
struct AffineModelSpec {
  std::vector<double> alpha;
  std::vector<double> c_flow;
  std::vector<std::vector<double>> routing;
  std::string jump_type;  // "affine-uniform" | "dirac-scale"
  double kappa = 0.5;
  double beta = 0.0;
  double lambda = 1.0;
  double metric_c = 1.0;
  double anchor = 0.0;
};

PdmpModel make_affine_model(const AffineModelSpec& spec, const std::string& name = "custom-affine");

}  // namespace pdmpclt
