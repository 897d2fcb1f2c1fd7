#include "pdmpclt/fm_distance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include "pdmpclt/statistics.hpp"

namespace pdmpclt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMassEps = 1e-15;

struct UnionSupport {
  std::vector<HybridState> points;
  std::vector<double> net;  // mu_k - nu_k
};

std::uint64_t state_key(const HybridState& x) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 0x100000001b3ull;
  };
  mix(static_cast<std::uint64_t>(x.regime));
  for (double c : x.y) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(c));
    std::memcpy(&bits, &c, sizeof(bits));
    mix(bits);
  }
  return h;
}

bool state_equal(const HybridState& a, const HybridState& b) {
  return a.regime == b.regime && a.y == b.y;
}

UnionSupport merge_supports(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
  UnionSupport u;
  std::unordered_multimap<std::uint64_t, std::size_t> index;
  auto locate = [&](const HybridState& x) -> std::size_t {
    const auto key = state_key(x);
    auto [lo, hi] = index.equal_range(key);
    for (auto it = lo; it != hi; ++it)
      if (state_equal(u.points[it->second], x)) return it->second;
    u.points.push_back(x);
    u.net.push_back(0.0);
    index.emplace(key, u.points.size() - 1);
    return u.points.size() - 1;
  };
  for (std::size_t k = 0; k < mu.size(); ++k) u.net[locate(mu.points[k])] += mu.weights[k];
  for (std::size_t k = 0; k < nu.size(); ++k) u.net[locate(nu.points[k])] -= nu.weights[k];
  return u;
}

// Successive shortest paths with node potentials on the complete graph over
// the support plus the virtual mass node omega. Uncapacitated arcs; residual
// (backward) arcs tracked for arcs that carry flow.
class FlowSolver {
 public:
  FlowSolver(const UnionSupport& support, const HybridMetric& metric)
      : n_(support.points.size()), omega_(n_), excess_(support.net) {
    excess_.push_back(0.0);  // omega
    dist_.assign(n_ * n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i + 1; j < n_; ++j) {
        const double d = metric(support.points[i], support.points[j]);
        dist_[i * n_ + j] = d;
        dist_[j * n_ + i] = d;
      }
    pi_.assign(n_ + 1, 0.0);
    back_.resize(n_ + 1);
  }

  void solve() {
    // Positive excess below kSupplyTol is floating-point residue from the
    // weight arithmetic, not mass to route.
    constexpr double kSupplyTol = 1e-12;
    while (true) {
      std::size_t source = n_ + 1;
      for (std::size_t k = 0; k < n_; ++k)
        if (excess_[k] > kSupplyTol) {
          source = k;
          break;
        }
      if (source == n_ + 1) break;
      if (!augment_from(source)) break;  // only rounding residue left to absorb it
    }
  }

  // Optimal test function via the final potentials, normalized at omega.
  std::vector<double> dual() const {
    std::vector<double> f(n_);
    for (std::size_t k = 0; k < n_; ++k) f[k] = std::clamp(pi_[omega_] - pi_[k], -1.0, 1.0);
    return f;
  }

 private:
  double arc_cost(std::size_t u, std::size_t v) const {
    if (u == v) return kInf;
    if (u == omega_ || v == omega_) return 1.0;
    return dist_[u * n_ + v];
  }

  bool augment_from(std::size_t source) {
    const std::size_t m = n_ + 1;
    std::vector<double> d(m, kInf);
    std::vector<std::size_t> parent(m, m);
    std::vector<char> parent_residual(m, 0);
    std::vector<char> done(m, 0);
    d[source] = 0.0;

    std::size_t sink = m;
    while (true) {
      std::size_t u = m;
      double best = kInf;
      for (std::size_t k = 0; k < m; ++k)
        if (!done[k] && d[k] < best) {
          best = d[k];
          u = k;
        }
      if (u == m) break;
      done[u] = 1;
      if (u != source && excess_[u] < -kMassEps) {
        sink = u;
        break;
      }
      for (std::size_t v = 0; v < m; ++v) {
        if (v == u || done[v]) continue;
        const double rc = std::max(0.0, arc_cost(u, v) + pi_[u] - pi_[v]);
        if (d[u] + rc < d[v]) {
          d[v] = d[u] + rc;
          parent[v] = u;
          parent_residual[v] = 0;
        }
      }
      for (std::size_t v : back_[u]) {
        // Residual of a flow-carrying arc (v, u): cost -c(v,u), capacity the flow.
        if (done[v]) continue;
        const double rc = std::max(0.0, -arc_cost(v, u) + pi_[u] - pi_[v]);
        if (d[u] + rc < d[v]) {
          d[v] = d[u] + rc;
          parent[v] = u;
          parent_residual[v] = 1;
        }
      }
    }
    if (sink == m) {
      // A source above tolerance with no matching sink means the remaining
      // imbalance is rounding residue; anything larger is a real solver bug.
      if (excess_[source] > 1e-9)
        throw std::runtime_error("fm_distance: internal flow error (no sink reachable)");
      return false;
    }

    for (std::size_t k = 0; k < m; ++k) pi_[k] += std::min(d[k], d[sink]);

    // Bottleneck: supply, deficit, and every residual capacity on the path.
    double delta = std::min(excess_[source], -excess_[sink]);
    for (std::size_t v = sink; v != source; v = parent[v])
      if (parent_residual[v]) delta = std::min(delta, flow_.at(key(v, parent[v])));
    for (std::size_t v = sink; v != source; v = parent[v]) {
      if (parent_residual[v])
        reduce_flow(v, parent[v], delta);
      else
        push_flow(parent[v], v, delta);
    }
    excess_[source] -= delta;
    excess_[sink] += delta;
    return true;
  }

  void push_flow(std::size_t u, std::size_t v, double delta) {
    // Cancel against opposite flow first (possible only on zero-cost ties);
    // leftover becomes forward flow.
    const std::uint64_t rev = key(v, u);
    auto it = flow_.find(rev);
    if (it != flow_.end()) {
      if (it->second > delta) {
        it->second -= delta;
        return;
      }
      delta -= it->second;
      flow_.erase(it);
      rebuild_back(u);
      if (delta <= 0.0) return;
    }
    auto [fit, fresh] = flow_.try_emplace(key(u, v), 0.0);
    if (fresh) back_[v].push_back(u);
    fit->second += delta;
  }

  // Cancel delta units of the flow on (head, tail) while walking its residual.
  void reduce_flow(std::size_t tail, std::size_t head, double delta) {
    auto it = flow_.find(key(tail, head));
    if (it == flow_.end()) throw std::logic_error("fm_distance: residual bookkeeping broke");
    it->second -= delta;
    if (it->second <= kMassEps) {
      flow_.erase(it);
      rebuild_back(head);
    }
  }

  void rebuild_back(std::size_t u) {
    // Drop stale entries for node u (arcs (v, u) that no longer carry flow).
    auto& vec = back_[u];
    vec.erase(std::remove_if(vec.begin(), vec.end(),
                             [&](std::size_t v) { return flow_.find(key(v, u)) == flow_.end(); }),
              vec.end());
  }

  static std::uint64_t key(std::size_t u, std::size_t v) {
    return (static_cast<std::uint64_t>(u) << 32) | static_cast<std::uint64_t>(v);
  }

  std::size_t n_;
  std::size_t omega_;
  std::vector<double> excess_;
  std::vector<double> dist_;
  std::vector<double> pi_;
  std::vector<std::vector<std::size_t>> back_;
  std::unordered_map<std::uint64_t, double> flow_;
};

}  // namespace

FmResult fm_distance_full(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                          const HybridMetric& metric, const FmOptions& options) {
  if (mu.size() == 0 || nu.size() == 0)
    throw std::invalid_argument("fm_distance: measures must be nonempty");
  UnionSupport support = merge_supports(mu, nu);
  if (support.points.size() > options.support_cap)
    throw std::invalid_argument("fm_distance: union support exceeds the configured cap");

  FlowSolver solver(support, metric);
  solver.solve();
  const std::vector<double> f = solver.dual();

  std::vector<double> terms(f.size());
  for (std::size_t k = 0; k < f.size(); ++k) terms[k] = f[k] * support.net[k];
  FmResult result;
  result.distance = std::max(0.0, pairwise_sum(terms));
  if (options.want_dual) {
    result.support = std::move(support.points);
    result.dual = f;
  }
  return result;
}

double fm_distance(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu,
                   const HybridMetric& metric, const FmOptions& options) {
  return fm_distance_full(mu, nu, metric, options).distance;
}

EmpiricalMeasure subsample(const EmpiricalMeasure& mu, std::size_t m, RngStream& rng) {
  if (m == 0) throw std::invalid_argument("subsample: m must be >= 1");
  std::vector<double> cum(mu.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < mu.size(); ++k) {
    acc += mu.weights[k];
    cum[k] = acc;
  }
  std::vector<HybridState> pts;
  pts.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double u = rng.uniform01() * acc;
    const auto it = std::lower_bound(cum.begin(), cum.end(), u);
    const auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()), mu.size() - 1);
    pts.push_back(mu.points[idx]);
  }
  return EmpiricalMeasure::uniform(std::move(pts));
}

}  // namespace pdmpclt
