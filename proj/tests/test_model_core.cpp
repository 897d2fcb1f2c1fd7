#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "pdmpclt/model.hpp"
#include "pdmpclt/observable.hpp"
#include "pdmpclt/rng.hpp"
#include "pdmpclt/statistics.hpp"

using namespace pdmpclt;

TEST_CASE("builtin defaults") {
  const PdmpModel cm = builtin_model("contract-multijump");
  CHECK(cm.lambda == 1.0);
  CHECK(cm.params.at("kappa") == 0.5);
  CHECK(cm.params.at("alpha") == 1.0);
  CHECK(cm.num_regimes == 1);
  CHECK(cm.warnings.empty());

  const PdmpModel ou = builtin_model("two-regime-ou", {{"kappa", 0.5}});
  REQUIRE(ou.claimed.has_value());
  CHECK(ou.claimed->a == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(ou.claimed->b == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(ou.claimed->L == 1.0);
  CHECK(ou.claimed->M == 1.0);  // max |c_i| with anchor 0
  CHECK(2.0 * ou.claimed->a * ou.claimed->L * ou.claimed->L == doctest::Approx(0.5));
  CHECK(ou.warnings.empty());
}

TEST_CASE("unknown model and unknown override are errors") {
  CHECK_THROWS_AS(builtin_model("nope"), std::invalid_argument);
  CHECK_THROWS_AS(builtin_model("two-regime-ou", {{"kapa", 0.5}}), std::invalid_argument);
}

TEST_CASE("hypothesis-violating parameters set a warning flag, not an error") {
  const PdmpModel ou = builtin_model("two-regime-ou", {{"kappa", 0.8}});
  CHECK_FALSE(ou.warnings.empty());
}

TEST_CASE("semiflow law on 1000 random probes") {
  for (const char* name : {"contract-multijump", "two-regime-ou"}) {
    const PdmpModel m = builtin_model(name);
    RngStream rng(321);
    Vec y(1), a(1), b(1), c(1);
    for (int probe = 0; probe < 1000; ++probe) {
      y[0] = rng.uniform(-8.0, 8.0);
      const double s = rng.uniform(0.0, 4.0);
      const double t = rng.uniform(0.0, 4.0);
      const int i = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(m.num_regimes));
      m.flow(i, t, y, a);
      m.flow(i, s, a, b);
      m.flow(i, s + t, y, c);
      CHECK(m.rho_y(b, c) <= 1e-9 * (1.0 + m.rho_y(y, m.anchor)));
      m.flow(i, 0.0, y, a);
      CHECK(m.rho_y(a, y) <= 1e-12);
    }
  }
}

TEST_CASE("hybrid metric: identity, symmetry, regime weight") {
  const PdmpModel m = builtin_model("two-regime-ou", {{"metric_c", 2.0}});
  RngStream rng(11);
  for (int probe = 0; probe < 200; ++probe) {
    HybridState x1{{rng.uniform(-5, 5)}, static_cast<int>(rng.next_u64() % 2)};
    HybridState x2{{rng.uniform(-5, 5)}, static_cast<int>(rng.next_u64() % 2)};
    CHECK(m.metric(x1, x1) == 0.0);
    CHECK(m.metric(x1, x2) == doctest::Approx(m.metric(x2, x1)).epsilon(1e-15));
    const double expect =
        std::abs(x1.y[0] - x2.y[0]) + (x1.regime == x2.regime ? 0.0 : 2.0);
    CHECK(m.metric(x1, x2) == doctest::Approx(expect).epsilon(1e-15));
  }
}

TEST_CASE("metric triangle inequality on random triples") {
  const PdmpModel m = builtin_model("two-regime-ou", {{"metric_c", 1.5}});
  RngStream rng(33);
  for (int probe = 0; probe < 300; ++probe) {
    const HybridState a{{rng.uniform(-6, 6)}, static_cast<int>(rng.next_u64() % 2)};
    const HybridState b{{rng.uniform(-6, 6)}, static_cast<int>(rng.next_u64() % 2)};
    const HybridState c{{rng.uniform(-6, 6)}, static_cast<int>(rng.next_u64() % 2)};
    CHECK(m.rho_y(a.y, c.y) <= m.rho_y(a.y, b.y) + m.rho_y(b.y, c.y) + 1e-12);
    CHECK(m.metric(a, c) <= m.metric(a, b) + m.metric(b, c) + 1e-12);
  }
}

TEST_CASE("two-regime-ou jump second moment matches kappa^2 y^2 + beta^2/3") {
  const PdmpModel m = builtin_model("two-regime-ou");
  RngStream rng(2718);
  const std::size_t n = 1000000;
  for (double y0 : {0.0, 1.0, 5.0}) {
    Vec y{y0}, out(1);
    std::vector<double> sq(n);
    for (std::size_t r = 0; r < n; ++r) {
      m.jump_kernel(y, rng, out);
      sq[r] = out[0] * out[0];
    }
    const MeanEstimate est = mean_and_stderr(sq);
    const double expect = 0.25 * y0 * y0 + 1.0 / 3.0;
    CHECK(std::abs(est.value - expect) < 4.0 * est.std_err);
  }
}

TEST_CASE("lyapunov V vanishes at the anchor for every regime") {
  const PdmpModel m = builtin_model("two-regime-ou");
  CHECK(m.lyapunov(m.anchor_state(0)) == 0.0);
  CHECK(m.lyapunov(m.anchor_state(1)) == 0.0);
  CHECK(m.lyapunov(HybridState{{3.0}, 0}) == doctest::Approx(3.0));
}

TEST_CASE("observable certificates hold on random states") {
  const Observable g = make_clamp_linear(2.0);
  const PdmpModel m = builtin_model("two-regime-ou");
  RngStream rng(5150);
  for (int probe = 0; probe < 500; ++probe) {
    HybridState x1{{rng.uniform(-10, 10)}, static_cast<int>(rng.next_u64() % 2)};
    HybridState x2{{rng.uniform(-10, 10)}, static_cast<int>(rng.next_u64() % 2)};
    CHECK(std::abs(g(x1)) <= g.sup_bound());
    CHECK(std::abs(g(x1) - g(x2)) <= g.lip_const() * m.metric(x1, x2) + 1e-12);
  }
  CHECK(g.bl_norm() == 2.0);

  const Observable cosg = make_cosine(3.0);
  CHECK(cosg.sup_bound() == 1.0);
  CHECK(cosg.lip_const() == 3.0);
  CHECK(cosg.bl_norm() == 3.0);

  const Observable tab = make_tabulated({{-1.0, 0.0}, {0.0, 2.0}, {1.0, 0.0}});
  CHECK(tab.sup_bound() == 2.0);
  CHECK(tab.lip_const() == 2.0);
  CHECK(tab(HybridState{{-0.5}, 0}) == doctest::Approx(1.0));
  CHECK(tab(HybridState{{9.0}, 0}) == 0.0);
}

TEST_CASE("mean_under_mu_star gate") {
  Observable g = make_clamp_linear(1.0);
  CHECK_FALSE(g.has_mean());
  CHECK_THROWS_AS(g.centered(HybridState{{0.0}, 0}), std::logic_error);
  g.set_mean_under_mu_star(0.25);
  CHECK(g.centered(HybridState{{1.0}, 0}) == doctest::Approx(0.75));
}
