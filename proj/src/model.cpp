#include "pdmpclt/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "pdmpclt/observable.hpp"

namespace pdmpclt {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

double get_or(const std::map<std::string, double>& m, const std::string& key, double dflt) {
  auto it = m.find(key);
  return it == m.end() ? dflt : it->second;
}

void reject_unknown(const std::map<std::string, double>& overrides, const std::set<std::string>& known,
                    const std::string& model) {
  for (const auto& [k, v] : overrides)
    require(known.count(k) != 0, "builtin_model(" + model + "): unknown override key '" + k + "'");
}

SemiflowFn affine_flow_1d(double alpha, double c) {
  return [alpha, c](double t, std::span<const double> y, std::span<double> out) {
    out[0] = c + std::exp(-alpha * t) * (y[0] - c);
  };
}

}  // namespace

void PdmpModel::validate(RngStream rng) const {
  require(dim >= 1, "model: dim must be >= 1");
  require(num_regimes >= 1, "model: need at least one regime");
  require(lambda > 0.0, "model: lambda must be positive");
  require(static_cast<int>(routing.size()) == num_regimes, "model: routing row count != regimes");
  for (const auto& row : routing) {
    require(static_cast<int>(row.size()) == num_regimes, "model: routing row length != regimes");
    double sum = 0.0;
    for (double p : row) {
      require(p >= 0.0, "model: negative routing entry");
      sum += p;
    }
    require(std::abs(sum - 1.0) <= 1e-12, "model: routing row does not sum to 1");
  }
  require(static_cast<int>(semiflows.size()) == num_regimes, "model: semiflow count != regimes");
  require(static_cast<int>(anchor.size()) == dim, "model: anchor dimension mismatch");
  require(static_cast<bool>(jump_kernel), "model: missing jump kernel");
  require(static_cast<bool>(metric.rho_y), "model: missing metric");
  require(metric.c > 0.0, "model: regime weight c must be positive");

  // Semiflow identity and composition law on random probes.
  Vec y(dim), tmp1(dim), tmp2(dim), tmp3(dim);
  for (int probe = 0; probe < 64; ++probe) {
    for (int k = 0; k < dim; ++k) y[static_cast<std::size_t>(k)] = rng.uniform(-5.0, 5.0);
    const double s = rng.uniform(0.0, 3.0);
    const double t = rng.uniform(0.0, 3.0);
    for (int i = 0; i < num_regimes; ++i) {
      flow(i, 0.0, y, tmp1);
      require(metric.rho_y(tmp1, y) <= 1e-12, "model: semiflow violates S(0,y) = y");
      flow(i, t, y, tmp1);
      flow(i, s, tmp1, tmp2);
      flow(i, s + t, y, tmp3);
      const double tol = 1e-9 * (1.0 + metric.rho_y(y, anchor));
      require(metric.rho_y(tmp2, tmp3) <= tol, "model: semiflow violates composition law");
    }
  }
}

PdmpModel builtin_model(const std::string& name, const std::map<std::string, double>& overrides) {
  PdmpModel m;
  m.name = name;
  m.dim = 1;

  if (name == "contract-multijump") {
    reject_unknown(overrides, {"alpha", "kappa", "lambda", "metric_c"}, name);
    const double alpha = get_or(overrides, "alpha", 1.0);
    const double kappa = get_or(overrides, "kappa", 0.5);
    const double lambda = get_or(overrides, "lambda", 1.0);
    const double c = get_or(overrides, "metric_c", 1.0);
    require(alpha > 0.0, "contract-multijump: alpha must be positive");
    require(lambda > 0.0, "contract-multijump: lambda must be positive");

    m.num_regimes = 1;
    m.lambda = lambda;
    m.routing = {{1.0}};
    m.semiflows = {affine_flow_1d(alpha, 0.0)};
    m.jump_kernel = [kappa](std::span<const double> y, RngStream&, std::span<double> out) {
      out[0] = kappa * y[0];
    };
    m.metric = HybridMetric{euclidean, c};
    m.anchor = {0.0};
    // L = sup_t e^{-alpha t} = 1; flow fixes y* so M = 0; jump second moment
    // is exactly kappa^2 y^2.
    m.claimed = ClaimedBounds{0.0, 0.0, 1.0, kappa * kappa, 0.0};
    if (2.0 * kappa * kappa >= 1.0)
      m.warnings.push_back("balance condition 2 a L^2 < 1 fails: kappa^2 >= 1/2");
    m.params = {{"alpha", alpha}, {"kappa", kappa}, {"lambda", lambda}, {"metric_c", c}};
  } else if (name == "two-regime-ou") {
    reject_unknown(overrides,
                   {"alpha0", "alpha1", "c0", "c1", "kappa", "beta", "lambda", "p", "q", "metric_c"},
                   name);
    AffineModelSpec spec;
    spec.alpha = {get_or(overrides, "alpha0", 1.0), get_or(overrides, "alpha1", 2.0)};
    spec.c_flow = {get_or(overrides, "c0", 0.0), get_or(overrides, "c1", 1.0)};
    const double p = get_or(overrides, "p", 0.5);
    const double q = get_or(overrides, "q", 0.5);
    require(p >= 0.0 && p <= 1.0 && q >= 0.0 && q <= 1.0, "two-regime-ou: p,q must lie in [0,1]");
    spec.routing = {{1.0 - p, p}, {q, 1.0 - q}};
    spec.jump_type = "affine-uniform";
    spec.kappa = get_or(overrides, "kappa", 0.5);
    spec.beta = get_or(overrides, "beta", 1.0);
    spec.lambda = get_or(overrides, "lambda", 1.0);
    spec.metric_c = get_or(overrides, "metric_c", 1.0);
    m = make_affine_model(spec, name);
    m.params["p"] = p;
    m.params["q"] = q;
  } else {
    throw std::invalid_argument("builtin_model: unknown model '" + name + "'");
  }

  m.validate(RngStream(0x6d6f64656cull));
  return m;
}

PdmpModel make_affine_model(const AffineModelSpec& spec, const std::string& name) {
  PdmpModel m;
  m.name = name;
  m.dim = 1;
  m.num_regimes = static_cast<int>(spec.alpha.size());
  require(!spec.alpha.empty(), "affine model: need at least one regime");
  require(spec.c_flow.size() == spec.alpha.size(), "affine model: alpha/c_flow size mismatch");
  require(spec.lambda > 0.0, "affine model: lambda must be positive");
  m.lambda = spec.lambda;
  m.routing = spec.routing;

  double disp_max = 0.0;  // sup_t |S_i(t, y*) - y*|, the claimed displacement constant
  for (std::size_t i = 0; i < spec.alpha.size(); ++i) {
    require(spec.alpha[i] > 0.0, "affine model: alpha must be positive");
    m.semiflows.push_back(affine_flow_1d(spec.alpha[i], spec.c_flow[i]));
    disp_max = std::max(disp_max, std::abs(spec.c_flow[i] - spec.anchor));
  }

  const double kappa = spec.kappa;
  const double beta = spec.beta;
  double a = kappa * kappa;
  double b = 0.0;
  if (spec.jump_type == "affine-uniform") {
    require(beta >= 0.0, "affine model: beta must be nonnegative");
    m.jump_kernel = [kappa, beta](std::span<const double> y, RngStream& rng, std::span<double> out) {
      out[0] = kappa * y[0] + rng.uniform(-beta, beta);
    };
    b = beta * beta / 3.0;  // E xi^2 for xi ~ Uniform[-beta, beta]
  } else if (spec.jump_type == "dirac-scale") {
    m.jump_kernel = [kappa](std::span<const double> y, RngStream&, std::span<double> out) {
      out[0] = kappa * y[0];
    };
  } else {
    throw std::invalid_argument("affine model: unknown jump type '" + spec.jump_type + "'");
  }

  require(spec.metric_c > 0.0, "affine model: metric_c must be positive");
  m.metric = HybridMetric{euclidean, spec.metric_c};
  m.anchor = {spec.anchor};
  // Jump second-moment constants: for anchor 0, E(kappa y + xi)^2 = kappa^2 y^2 + E xi^2.
  m.claimed = ClaimedBounds{disp_max, 0.0, 1.0, a, b};
  if (2.0 * a >= 1.0)
    m.warnings.push_back("balance condition 2 a L^2 < 1 fails: kappa^2 >= 1/2");
  if (std::abs(spec.anchor) > 0.0)
    m.warnings.push_back("claimed jump second-moment constants assume anchor 0");

  m.params = {{"lambda", spec.lambda}, {"kappa", kappa}, {"beta", beta}, {"metric_c", spec.metric_c},
              {"anchor", spec.anchor}};
  for (std::size_t i = 0; i < spec.alpha.size(); ++i) {
    m.params["alpha" + std::to_string(i)] = spec.alpha[i];
    m.params["c" + std::to_string(i)] = spec.c_flow[i];
  }

  m.validate(RngStream(0x616666696eull));
  return m;
}

Observable make_clamp_linear(double radius) {
  if (radius <= 0.0) throw std::invalid_argument("clamp-linear: radius must be positive");
  return Observable(
      [radius](const StateView& x) { return std::clamp(x.y[0], -radius, radius); }, radius, 1.0);
}

Observable make_cosine(double freq) {
  return Observable([freq](const StateView& x) { return std::cos(freq * x.y[0]); }, 1.0,
                    std::abs(freq));
}

Observable make_tabulated(std::vector<std::pair<double, double>> knots) {
  if (knots.size() < 2) throw std::invalid_argument("tabulated observable: need >= 2 knots");
  std::sort(knots.begin(), knots.end());
  double sup = 0.0, lip = 0.0;
  for (std::size_t k = 0; k < knots.size(); ++k) {
    sup = std::max(sup, std::abs(knots[k].second));
    if (k > 0) {
      const double dy = knots[k].first - knots[k - 1].first;
      if (dy <= 0.0) throw std::invalid_argument("tabulated observable: duplicate knot abscissa");
      lip = std::max(lip, std::abs(knots[k].second - knots[k - 1].second) / dy);
    }
  }
  auto eval = [knots](const StateView& x) {
    const double y = x.y[0];
    if (y <= knots.front().first) return knots.front().second;
    if (y >= knots.back().first) return knots.back().second;
    auto hi = std::upper_bound(knots.begin(), knots.end(), std::make_pair(y, 1e308));
    auto lo = hi - 1;
    const double w = (y - lo->first) / (hi->first - lo->first);
    return lo->second + w * (hi->second - lo->second);
  };
  return Observable(eval, sup, lip);
}

}  // namespace pdmpclt
