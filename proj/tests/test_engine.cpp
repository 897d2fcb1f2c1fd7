#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "pdmpclt/clt.hpp"
#include "pdmpclt/model.hpp"
#include "pdmpclt/statistics.hpp"
#include "pdmpclt/trajectory.hpp"

using namespace pdmpclt;

namespace {

Observable identity_observable(double radius = 100.0) { return make_clamp_linear(radius); }

}  // namespace

TEST_CASE("step_embedded with a deterministic jump kernel applies flow then scale") {
  const PdmpModel m = builtin_model("contract-multijump");
  RngStream rng(1);
  const HybridState x{{1.0}, 0};
  auto [dt, next] = step_embedded(m, x, rng);
  CHECK(next.y[0] == doctest::Approx(0.5 * std::exp(-dt)).epsilon(1e-14));
  CHECK(next.regime == 0);
}

TEST_CASE("holding times are Exponential(lambda)") {
  const PdmpModel m = builtin_model("two-regime-ou", {{"lambda", 2.0}});
  RngStream rng(77);
  const std::size_t n = 1000000;
  std::vector<double> dts(n);
  HybridState x{{0.3}, 0};
  for (auto& dt : dts) {
    auto [d, next] = step_embedded(m, x, rng);
    dt = d;
  }
  const MeanEstimate est = mean_and_stderr(dts);
  CHECK(std::abs(est.value - 0.5) < 4.0 * est.std_err);

  // KS against the exponential law, aggregated over 1e5 increments.
  std::vector<double> head(dts.begin(), dts.begin() + 100000);
  const double d = ks_statistic(head, [](double t) { return 1.0 - std::exp(-2.0 * t); });
  CHECK(d <= 1.628 / std::sqrt(100000.0));  // level 0.01
}

TEST_CASE("next-regime frequency follows the routing row") {
  const PdmpModel m = builtin_model("two-regime-ou");
  RngStream rng(13);
  const std::size_t n = 100000;
  std::size_t to_one = 0;
  const HybridState x{{0.0}, 0};
  for (std::size_t i = 0; i < n; ++i) {
    auto [dt, next] = step_embedded(m, x, rng);
    to_one += next.regime == 1 ? 1 : 0;
  }
  const double p_hat = static_cast<double>(to_one) / static_cast<double>(n);
  CHECK(std::abs(p_hat - 0.5) < 0.006);
}

TEST_CASE("trajectory skeleton invariants") {
  const PdmpModel m = builtin_model("two-regime-ou");
  const HybridState x0{{2.0}, 1};
  const Trajectory traj = simulate(m, x0, 40.0, RngStream(404));
  REQUIRE(traj.jump_count() >= 2);
  CHECK(traj.tau.front() == 0.0);
  CHECK(traj.state_at_jump(0).y[0] == x0.y[0]);
  CHECK(traj.state_at_jump(0).regime == x0.regime);
  for (std::size_t n = 1; n < traj.jump_count(); ++n) CHECK(traj.tau[n] > traj.tau[n - 1]);
  CHECK(traj.tau.back() <= traj.horizon);
}

TEST_CASE("simulate: reproducibility, horizon edge, jump counts") {
  const PdmpModel m = builtin_model("two-regime-ou");
  const HybridState x0{{1.0}, 0};

  const Trajectory a = simulate(m, x0, 50.0, RngStream(5).split(3));
  const Trajectory b = simulate(m, x0, 50.0, RngStream(5).split(3));
  CHECK(a.tau == b.tau);
  CHECK(a.y_flat == b.y_flat);
  CHECK(a.regime == b.regime);

  CHECK_THROWS_AS(simulate(m, x0, 0.0, RngStream(1)), std::invalid_argument);
  const Trajectory tiny = simulate(m, x0, 1e-9, RngStream(2));
  CHECK(tiny.jump_count() == 1);  // only tau_0

  // Poisson(100) count over 200 replicas.
  RngStream rng(8);
  std::vector<double> counts(200);
  for (std::size_t r = 0; r < counts.size(); ++r)
    counts[r] = static_cast<double>(simulate(m, x0, 100.0, rng.split(r)).jump_count() - 1);
  CHECK(std::abs(sample_mean(counts) - 100.0) < 4.0);
}

TEST_CASE("eval_at: left endpoints, closed form between jumps, horizon") {
  const PdmpModel m = builtin_model("contract-multijump");
  const HybridState x0{{1.0}, 0};
  const Trajectory traj = simulate(m, x0, 10.0, RngStream(21));
  REQUIRE(traj.jump_count() >= 3);

  // exactly at a jump time: the post-jump state
  const HybridState at1 = eval_at(traj, m, traj.tau[1]);
  CHECK(at1.y[0] == doctest::Approx(traj.y_flat[1]).epsilon(1e-14));

  // between the first two jumps: Psi(t) = y0 e^{-alpha t} kappa^{N(t)}
  const double t_mid = 0.5 * (traj.tau[1] + traj.tau[2]);
  CHECK(eval_at(traj, m, t_mid).y[0] ==
        doctest::Approx(1.0 * std::exp(-t_mid) * 0.5).epsilon(1e-12));

  // at the horizon: flow from the last jump
  const HybridState end = eval_at(traj, m, traj.horizon);
  const std::size_t last = traj.jump_count() - 1;
  CHECK(end.y[0] == doctest::Approx(traj.y_flat[last] *
                                    std::exp(-(traj.horizon - traj.tau[last]))).epsilon(1e-12));

  CHECK_THROWS_AS(eval_at(traj, m, -0.1), std::out_of_range);
  CHECK_THROWS_AS(eval_at(traj, m, 10.1), std::out_of_range);
}

TEST_CASE("path_integral: constants, analytic segment, step-halving error") {
  const PdmpModel m = builtin_model("contract-multijump");
  Observable one([](const StateView&) { return 1.0; }, 1.0, 0.0);
  const Trajectory traj = simulate(m, HybridState{{1.0}, 0}, 7.0, RngStream(31));
  const QuadResult whole = path_integral(traj, m, one, 0.0, 7.0);
  CHECK(whole.value == doctest::Approx(7.0).epsilon(1e-12));

  // no-jump prefix: integral of y0 e^{-alpha s} over [0, tau_1]
  const double t1 = std::min(traj.tau[1], 7.0);
  const Observable ident = identity_observable();
  const QuadResult prefix = path_integral(traj, m, ident, 0.0, t1);
  CHECK(prefix.value == doctest::Approx(1.0 - std::exp(-t1)).epsilon(1e-10));

  const PdmpModel ou = builtin_model("two-regime-ou");
  const Trajectory traj2 = simulate(ou, HybridState{{1.0}, 0}, 20.0, RngStream(32));
  const QuadResult full = path_integral(traj2, ou, ident, 0.0, 20.0);
  CHECK(full.abs_error <= 1e-8 * std::max(1.0, std::abs(full.value)));

  CHECK_THROWS_AS(path_integral(traj, m, ident, -1.0, 2.0), std::out_of_range);
  CHECK_THROWS_AS(path_integral(traj, m, ident, 3.0, 2.0), std::out_of_range);
}

TEST_CASE("path integral matches exact affine segment integrals") {
  // For S_i(t,y) = c_i + e^{-a_i t}(y - c_i) the integral of y over a jump
  // segment has the closed form c d + (y - c)(1 - e^{-a d})/a.
  const PdmpModel m = builtin_model("two-regime-ou");
  const std::array<double, 2> alpha{1.0, 2.0};
  const std::array<double, 2> c_flow{0.0, 1.0};
  const Observable ident = identity_observable();
  const double horizon = 25.0;
  const Trajectory traj = simulate(m, HybridState{{1.3}, 0}, horizon, RngStream(777));

  double exact = 0.0;
  for (std::size_t n = 0; n < traj.jump_count(); ++n) {
    const StateView s = traj.state_at_jump(n);
    const double seg_end = n + 1 < traj.jump_count() ? traj.tau[n + 1] : horizon;
    const double d = seg_end - traj.tau[n];
    const double a = alpha[static_cast<std::size_t>(s.regime)];
    const double c = c_flow[static_cast<std::size_t>(s.regime)];
    exact += c * d + (s.y[0] - c) * (1.0 - std::exp(-a * d)) / a;
  }
  const QuadResult got = path_integral(traj, m, ident, 0.0, horizon);
  CHECK(got.value == doctest::Approx(exact).epsilon(1e-10));
  CHECK(std::abs(got.value - exact) <= std::max(10.0 * got.abs_error, 1e-10));
}

TEST_CASE("walker and stored trajectory integrate identically") {
  const PdmpModel m = builtin_model("two-regime-ou");
  const HybridState x0{{0.7}, 1};
  const Observable ident = identity_observable();
  auto f = [&](const StateView& x) { return ident(x); };

  RngStream stream = RngStream(17).split(4);
  const Trajectory traj = simulate(m, x0, 30.0, stream);
  const double stored = path_integral(traj, m, ident, 0.0, 30.0).value;

  PathWalker walker(m, x0, stream);  // same stream state by value
  const double streamed = walker.integrate_to(30.0, f);
  CHECK(streamed == doctest::Approx(stored).epsilon(1e-13));

  // walker states match eval_at on a grid
  PathWalker walker2(m, x0, stream);
  for (double t : {0.0, 0.5, 3.25, 17.0, 30.0}) {
    const HybridState a = to_state(walker2.state_at(t));
    const HybridState b = eval_at(traj, m, t);
    CHECK(a.regime == b.regime);
    CHECK(a.y[0] == doctest::Approx(b.y[0]).epsilon(1e-13));
  }
}

TEST_CASE("Markov restart property") {
  // statistics of g at T from a direct run match a run restarted at s
  const PdmpModel m = builtin_model("two-regime-ou");
  const Observable g = identity_observable(10.0);
  const HybridState x0{{2.0}, 0};
  const double s = 1.5, T = 3.0;
  const std::size_t n = 10000;

  RngStream rng(1234);
  std::vector<double> direct(n), restarted(n);
  for (std::size_t r = 0; r < n; ++r) {
    const Trajectory traj = simulate(m, x0, T, rng.split(2 * r));
    direct[r] = g(eval_at(traj, m, T));
    const HybridState mid = eval_at(traj, m, s);
    const Trajectory tail = simulate(m, mid, T - s, rng.split(2 * r + 1));
    restarted[r] = g(eval_at(tail, m, T - s));
  }
  const MeanEstimate a = mean_and_stderr(direct);
  const MeanEstimate b = mean_and_stderr(restarted);
  CHECK(agreement_z(a, b) < 4.0);
}

TEST_CASE("duality sanity: disjoint seed ranges agree") {
  const PdmpModel m = builtin_model("two-regime-ou");
  const Observable g = identity_observable(10.0);
  const HybridState x0{{1.0}, 0};
  const double t = 2.0;
  const std::size_t n = 20000;
  std::vector<double> first(n), second(n);
  RngStream rng(9);
  for (std::size_t r = 0; r < n; ++r) {
    first[r] = g(eval_at(simulate(m, x0, t, rng.split(r)), m, t));
    second[r] = g(eval_at(simulate(m, x0, t, rng.split(n + r)), m, t));
  }
  CHECK(agreement_z(mean_and_stderr(first), mean_and_stderr(second)) < 4.0);
}

TEST_CASE("runaway models hit the jump cap") {
  // rate so large the cap trips long before the horizon
  PdmpModel m = builtin_model("contract-multijump", {{"lambda", 1e9}});
  CHECK_THROWS_AS(simulate(m, HybridState{{1.0}, 0}, 1e9, RngStream(3)), std::runtime_error);
}
