#include "pdmpclt/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pdmpclt {

namespace {

// Composite Simpson over [a,b] with n (even) intervals of the flow started at
// y_tau at time tau, fixed regime. Left-to-right summation so that callers
// asking for the same (a,b,n) get bit-identical results.
double simpson_on_flow(const PdmpModel& model, int regime, std::span<const double> y_tau, double tau,
                       double a, double b, const std::function<double(const StateView&)>& f,
                       std::size_t n, Vec& scratch) {
  const double h = (b - a) / static_cast<double>(n);
  const StateView view{scratch, regime};
  auto eval = [&](double s) {
    model.flow(regime, s - tau, y_tau, scratch);
    return f(view);
  };
  double sum = eval(a);
  for (std::size_t k = 1; k < n; ++k)
    sum += (k % 2 == 1 ? 4.0 : 2.0) * eval(a + h * static_cast<double>(k));
  sum += eval(b);
  return sum * h / 3.0;
}

std::size_t simpson_intervals(double len, double segment_len) {
  const double h = std::min(0.01, segment_len / 16.0);
  const auto half_steps = static_cast<std::size_t>(std::ceil(len / (2.0 * h)));
  return 2 * std::max<std::size_t>(1, half_steps);
}

struct SegmentPiece {
  int regime;
  std::span<const double> y_tau;
  double tau, a, b, segment_len;
};

// Shared by the stored-trajectory and streaming integrators: fine value plus
// a coarse pass for the error estimate.
void integrate_piece(const PdmpModel& model, const SegmentPiece& p,
                     const std::function<double(const StateView&)>& f, Vec& scratch, bool with_error,
                     double& value, double& err) {
  if (p.b - p.a <= 0.0) return;
  const std::size_t n = simpson_intervals(p.b - p.a, p.segment_len);
  const double fine = simpson_on_flow(model, p.regime, p.y_tau, p.tau, p.a, p.b, f, 2 * n, scratch);
  value += fine;
  if (with_error) {
    const double coarse = simpson_on_flow(model, p.regime, p.y_tau, p.tau, p.a, p.b, f, n, scratch);
    err += std::abs(fine - coarse) / 15.0;
  }
}

}  // namespace

std::pair<double, HybridState> step_embedded(const PdmpModel& model, const HybridState& state,
                                             RngStream& rng) {
  const double delta_tau = rng.exponential(model.lambda);
  Vec y_flow(static_cast<std::size_t>(model.dim));
  model.flow(state.regime, delta_tau, state.y, y_flow);
  const auto next_regime =
      static_cast<int>(rng.categorical(model.routing[static_cast<std::size_t>(state.regime)]));
  HybridState next;
  next.regime = next_regime;
  next.y.resize(static_cast<std::size_t>(model.dim));
  model.jump_kernel(y_flow, rng, next.y);
  return {delta_tau, std::move(next)};
}

Trajectory simulate(const PdmpModel& model, const HybridState& x0, double horizon, RngStream rng) {
  if (horizon <= 0.0) throw std::invalid_argument("simulate: horizon must be positive");
  Trajectory traj;
  traj.x0 = x0;
  traj.horizon = horizon;
  traj.seed = rng.token();
  traj.dim = model.dim;

  const auto expected = static_cast<std::size_t>(std::min(1e7, horizon * model.lambda * 1.5 + 16.0));
  traj.tau.reserve(expected);
  traj.y_flat.reserve(expected * static_cast<std::size_t>(model.dim));
  traj.regime.reserve(expected);

  auto push = [&](double t, const HybridState& s) {
    traj.tau.push_back(t);
    traj.y_flat.insert(traj.y_flat.end(), s.y.begin(), s.y.end());
    traj.regime.push_back(s.regime);
  };
  push(0.0, x0);

  double clock = 0.0;
  HybridState current = x0;
  while (true) {
    auto [delta, next] = step_embedded(model, current, rng);
    clock += delta;
    if (clock > horizon) break;  // overshooting step drawn and discarded
    current = std::move(next);
    push(clock, current);
    if (traj.tau.size() > kJumpCap)
      throw std::runtime_error("simulate: jump-count safety cap exceeded (runaway model?)");
  }
  return traj;
}

HybridState eval_at(const Trajectory& traj, const PdmpModel& model, double t) {
  if (t < 0.0 || t > traj.horizon) throw std::out_of_range("eval_at: t outside [0, horizon]");
  // Last n with tau[n] <= t.
  const auto it = std::upper_bound(traj.tau.begin(), traj.tau.end(), t);
  const auto n = static_cast<std::size_t>(it - traj.tau.begin()) - 1;
  const StateView base = traj.state_at_jump(n);
  HybridState out;
  out.regime = base.regime;
  out.y.resize(static_cast<std::size_t>(traj.dim));
  model.flow(base.regime, t - traj.tau[n], base.y, out.y);
  return out;
}

QuadResult path_integral(const Trajectory& traj, const PdmpModel& model,
                         const std::function<double(const StateView&)>& f, double t0, double t1) {
  if (t0 < 0.0 || t1 > traj.horizon || t0 > t1)
    throw std::out_of_range("path_integral: need 0 <= t0 <= t1 <= horizon");
  QuadResult res;
  if (t1 == t0) return res;
  Vec scratch(static_cast<std::size_t>(traj.dim));

  const auto it = std::upper_bound(traj.tau.begin(), traj.tau.end(), t0);
  auto n = static_cast<std::size_t>(it - traj.tau.begin()) - 1;
  for (; n < traj.jump_count(); ++n) {
    const double seg_a = traj.tau[n];
    const double seg_b = n + 1 < traj.jump_count() ? traj.tau[n + 1] : traj.horizon;
    const double a = std::max(seg_a, t0);
    const double b = std::min(seg_b, t1);
    if (b <= a) {
      if (seg_a >= t1) break;
      continue;
    }
    const StateView base = traj.state_at_jump(n);
    integrate_piece(model, {base.regime, base.y, seg_a, a, b, seg_b - seg_a}, f, scratch,
                    /*with_error=*/true, res.value, res.abs_error);
    if (seg_b >= t1) break;
  }
  return res;
}

QuadResult path_integral(const Trajectory& traj, const PdmpModel& model, const Observable& g,
                         double t0, double t1) {
  return path_integral(
      traj, model, [&g](const StateView& x) { return g(x); }, t0, t1);
}

PathWalker::PathWalker(const PdmpModel& model, const HybridState& x0, RngStream rng)
    : model_(model), rng_(rng), at_jump_(x0), scratch_(static_cast<std::size_t>(model.dim)) {
  auto [delta, next] = step_embedded(model_, at_jump_, rng_);
  seg_end_ = delta;
  next_jump_ = std::move(next);
}

void PathWalker::ensure_segment_covers(double t) {
  while (seg_end_ <= t) {
    at_jump_ = next_jump_;
    seg_start_ = seg_end_;
    auto [delta, next] = step_embedded(model_, at_jump_, rng_);
    seg_end_ += delta;
    next_jump_ = std::move(next);
    if (++jumps_taken_ > kJumpCap)
      throw std::runtime_error("PathWalker: jump-count safety cap exceeded (runaway model?)");
  }
}

StateView PathWalker::state_at(double t) {
  if (t < cursor_) throw std::logic_error("PathWalker: time must be nondecreasing");
  ensure_segment_covers(t);
  cursor_ = t;
  model_.flow(at_jump_.regime, t - seg_start_, at_jump_.y, scratch_);
  return StateView{scratch_, at_jump_.regime};
}

double PathWalker::integrate_to(double t, const std::function<double(const StateView&)>& f) {
  if (t < cursor_) throw std::logic_error("PathWalker: time must be nondecreasing");
  double value = 0.0, err = 0.0;
  while (cursor_ < t) {
    ensure_segment_covers(cursor_);  // guarantees seg_start_ <= cursor_ < seg_end_
    const double b = std::min(t, seg_end_);
    integrate_piece(model_, {at_jump_.regime, at_jump_.y, seg_start_, cursor_, b, seg_end_ - seg_start_},
                    f, scratch_, /*with_error=*/false, value, err);
    cursor_ = b;
  }
  cursor_ = t;
  return value;
}

}  // namespace pdmpclt
