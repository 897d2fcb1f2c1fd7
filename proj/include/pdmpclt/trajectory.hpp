#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "pdmpclt/model.hpp"
#include "pdmpclt/observable.hpp"
#include "pdmpclt/rng.hpp"
#include "pdmpclt/state.hpp"

namespace pdmpclt {

inline constexpr std::size_t kJumpCap = 10'000'000;

// Jump skeleton of one path: strictly increasing jump times with post-jump
// states, tau[0] = 0 holding the initial state. Between jumps the path is the
// deterministic flow of the active regime; interpolation is recomputed on
// demand so memory stays O(jump count).
struct Trajectory {
  HybridState x0;
  double horizon = 0.0;
  std::uint64_t seed = 0;
  int dim = 1;

  std::vector<double> tau;      // tau[0] = 0
  std::vector<double> y_flat;   // dim-strided post-jump coordinates
  std::vector<int> regime;

  std::size_t jump_count() const { return tau.size(); }

  StateView state_at_jump(std::size_t n) const {
    return StateView{{y_flat.data() + n * static_cast<std::size_t>(dim),
                      static_cast<std::size_t>(dim)},
                     regime[n]};
  }
};

// One transition of the embedded chain. Randomness consumption order is
// normative: holding time, then next regime, then jump location.
std::pair<double, HybridState> step_embedded(const PdmpModel& model, const HybridState& state,
                                             RngStream& rng);

// Exact simulation up to the horizon. Reproducible: the same stream yields a
// bit-identical jump list. Throws on horizon <= 0 and when the jump-count
// safety cap is exceeded.
Trajectory simulate(const PdmpModel& model, const HybridState& x0, double horizon, RngStream rng);

// State at time t in [0, horizon]: binary search for the active jump segment,
// then deterministic flow.
HybridState eval_at(const Trajectory& traj, const PdmpModel& model, double t);

struct QuadResult {
  double value = 0.0;
  double abs_error = 0.0;  // step-halving estimate
};

// integral_{t0}^{t1} f(path(s)) ds, segment-by-segment composite Simpson with
// step h = min(0.01, segment/16); the value is the half-step refinement and
// abs_error compares it against the coarse pass.
QuadResult path_integral(const Trajectory& traj, const PdmpModel& model,
                         const std::function<double(const StateView&)>& f, double t0, double t1);

QuadResult path_integral(const Trajectory& traj, const PdmpModel& model, const Observable& g,
                         double t0, double t1);

// Streaming walk along a freshly simulated path; used by the ensemble loops
// that only need integrals or states at grid times, not the stored skeleton.
// Consumes randomness exactly like simulate().
class PathWalker {
 public:
  PathWalker(const PdmpModel& model, const HybridState& x0, RngStream rng);

  // State at time t; t must be nondecreasing across calls. The returned view
  // aliases an internal scratch buffer valid until the next call.
  StateView state_at(double t);

  // Advances from the current position to time t while accumulating the
  // integral of f. Calls must have nondecreasing t.
  double integrate_to(double t, const std::function<double(const StateView&)>& f);

  double position() const { return cursor_; }

 private:
  void ensure_segment_covers(double t);

  const PdmpModel& model_;
  RngStream rng_;
  double cursor_ = 0.0;     // time up to which integrate_to has consumed
  double seg_start_ = 0.0;  // tau_n of the active segment
  double seg_end_ = 0.0;    // tau_{n+1}
  HybridState at_jump_;     // post-jump state at seg_start_
  HybridState next_jump_;   // post-jump state at seg_end_
  Vec scratch_;
  std::size_t jumps_taken_ = 0;
};

}  // namespace pdmpclt
