#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "pdmpclt/hypotheses.hpp"
#include "pdmpclt/model.hpp"
#include "pdmpclt/statistics.hpp"

using namespace pdmpclt;

TEST_CASE("constants: two-regime-ou defaults produce the lemma values") {
  // M=1, zeta=0, L=1, a=1/4, b=1/3, lambda=1
  const HypothesisConstants c = HypothesisConstants::from_primaries(1.0, 0.0, 1.0, 0.25, 1.0 / 3.0, 1.0);
  CHECK(c.m == 0);
  CHECK(c.eta == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(c.D == doctest::Approx(0.5 + 1.0 / 3.0).epsilon(1e-15));
  CHECK(c.Gamma_lemma == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(c.C_lemma == doctest::Approx((5.0 / 6.0) / 0.5 * 2.0).epsilon(1e-15));  // 10/3
  CHECK(c.A_prop == doctest::Approx(2.0).epsilon(1e-15));
  // B = 2 (L^2 C + M^2 (m! lambda^-m + 1) + M^2 sup(t^0+1)e^{-t}) = 2 (10/3 + 2 + 2)
  CHECK(c.B_prop == doctest::Approx(2.0 * (10.0 / 3.0 + 2.0 + 2.0)).epsilon(1e-14));

  // recomputation is exact and idempotent
  const HypothesisConstants again =
      HypothesisConstants::from_primaries(c.M, c.zeta, c.L, c.a, c.b, c.lambda);
  CHECK(again.eta == c.eta);
  CHECK(again.D == c.D);
  CHECK(again.Gamma_lemma == c.Gamma_lemma);
  CHECK(again.C_lemma == c.C_lemma);
  CHECK(again.B_prop == c.B_prop);
}

TEST_CASE("balance condition arithmetic") {
  CHECK(check_balance(HypothesisConstants::from_primaries(1, 0, 1.0, 0.25, 0.0, 1.0)));  // eta 0.5
  CHECK_THROWS_AS(HypothesisConstants::from_primaries(1, 0, 1.0, 0.5, 0.0, 1.0),
                  std::invalid_argument);  // eta = 1 exactly: boundary fails loudly
  // 2 * 0.1 * 4 = 0.8 < 1: passes
  CHECK(check_balance(HypothesisConstants::from_primaries(1, 0, 2.0, 0.1, 0.0, 1.0)));
}

TEST_CASE("check_s1 on the builtins") {
  const PdmpModel ou = builtin_model("two-regime-ou");
  const std::vector<double> grid{0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0};
  const S1Result pass = check_s1(ou, grid, 1.0, 0.0);
  CHECK(pass.pass);
  CHECK(pass.worst_ratio <= 1.0 + 1e-9);
  CHECK(pass.worst_ratio > 0.5);  // displacement approaches |c_1| = 1

  const S1Result fail = check_s1(ou, grid, 0.5, 0.0);
  CHECK_FALSE(fail.pass);

  const PdmpModel cm = builtin_model("contract-multijump");
  const S1Result fixed = check_s1(cm, grid, 0.1, 0.0);
  CHECK(fixed.pass);
  CHECK(fixed.worst_ratio == 0.0);  // flow fixes the anchor

  CHECK_THROWS_AS(check_s1(ou, {0.0, 1.0}, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("check_s2 on the builtins") {
  const PdmpModel ou = builtin_model("two-regime-ou");
  const S2Result pass = check_s2(ou, {0.0, 0.5, 1.0, 2.0}, 500, RngStream(1), 1.0);
  CHECK(pass.pass);
  CHECK(pass.L_hat == doctest::Approx(1.0).epsilon(1e-12));  // ratio exactly 1 at t = 0

  const S2Result only_zero = check_s2(ou, {0.0}, 100, RngStream(2), 1.0);
  CHECK(only_zero.L_hat == doctest::Approx(1.0).epsilon(1e-12));

  const S2Result fail = check_s2(ou, {0.0}, 100, RngStream(3), 0.5);
  CHECK_FALSE(fail.pass);
}

TEST_CASE("check_j1 on the builtins") {
  const PdmpModel ou = builtin_model("two-regime-ou");
  const std::vector<double> y_grid{0.0, 0.5, 1.0, 2.0, 5.0};
  const J1Result pass = check_j1(ou, y_grid, 100000, RngStream(4), 0.25, 1.0 / 3.0);
  CHECK(pass.pass);
  CHECK(pass.a_hat == doctest::Approx(0.25).epsilon(0.05));
  CHECK(pass.b_hat == doctest::Approx(1.0 / 3.0).epsilon(0.15));

  // deterministic kernel: zero Monte-Carlo variance
  const PdmpModel cm = builtin_model("contract-multijump");
  const J1Result dirac = check_j1(cm, y_grid, 1000, RngStream(5), 0.25, 0.0);
  CHECK(dirac.pass);
  CHECK(dirac.worst_margin >= 0.0);

  // halving a makes the bound fail at large y
  const J1Result fail = check_j1(ou, {5.0, 10.0}, 100000, RngStream(6), 0.125, 0.0);
  CHECK_FALSE(fail.pass);

  CHECK_THROWS_AS(check_j1(ou, y_grid, 100, RngStream(7), 0.25, 1.0), std::invalid_argument);
}

// Dense early region drives the decay fit; the far tail forms the top
// quartile so the plateau estimate sees no residual transient.
std::vector<double> drift_probe_grid() {
  std::vector<double> t_grid;
  for (int k = 0; k <= 15; ++k) t_grid.push_back(2.5 * k / 15.0);
  for (double t : {18.0, 20.0, 22.0, 24.0, 26.0, 28.0}) t_grid.push_back(t);
  return t_grid;
}

TEST_CASE("fit_drift recovers the analytic decay of contract-multijump across seeds") {
  const PdmpModel cm = builtin_model("contract-multijump");
  const oracles::ContractFacts facts;
  const std::vector<HybridState> x_grid{
      HybridState{{0.0}, 0}, HybridState{{0.5}, 0}, HybridState{{1.0}, 0},
      HybridState{{2.0}, 0}, HybridState{{3.0}, 0}};
  const std::vector<double> t_grid = drift_probe_grid();

  for (std::uint64_t seed : {11ull, 12ull}) {
    const DriftFit fit = fit_drift(cm, x_grid, t_grid, 4000, RngStream(seed));
    CHECK_FALSE(fit.degenerate);
    CHECK(fit.Gamma_hat == doctest::Approx(facts.drift_rate()).epsilon(0.10));
    CHECK(fit.B_hat <= 3.0 * fit.surface_noise);
    CHECK(fit.surface_noise > 0.0);
    CHECK(fit.pass);
  }
}

TEST_CASE("fit_drift certifies the bound on two-regime-ou") {
  const PdmpModel ou = builtin_model("two-regime-ou");
  const std::vector<HybridState> x_grid{
      HybridState{{0.0}, 0}, HybridState{{1.0}, 0}, HybridState{{2.0}, 1}, HybridState{{3.0}, 0}};
  const DriftFit fit = fit_drift(ou, x_grid, drift_probe_grid(), 4000, RngStream(21));
  CHECK_FALSE(fit.degenerate);
  CHECK(fit.Gamma_hat > 0.0);
  CHECK(fit.residual_max <= 0.05);
  CHECK(fit.pass);
}

TEST_CASE("fit_drift flags a signal-free probe as degenerate") {
  const PdmpModel cm = builtin_model("contract-multijump");
  // only the anchored row: V = 0 everywhere, no decay signal to fit
  const DriftFit fit =
      fit_drift(cm, {cm.anchor_state(0)}, drift_probe_grid(), 200, RngStream(31));
  CHECK(fit.degenerate);
  CHECK_FALSE(fit.pass);
}

TEST_CASE("check_genlap: t0 = 0 reduces to V^2 <= V^2 + C") {
  const PdmpModel ou = builtin_model("two-regime-ou");
  const HypothesisConstants c =
      HypothesisConstants::from_primaries(1.0, 0.0, 1.0, 0.25, 1.0 / 3.0, 1.0);
  const GenlapResult res = check_genlap(ou, c, {HybridState{{2.0}, 0}}, {0.0}, 200, RngStream(8));
  REQUIRE(res.rows.size() == 1);
  CHECK(res.rows[0].estimate == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(res.rows[0].std_err == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(res.pass);
}

TEST_CASE("check_genlap passes on the two-regime-ou probe grid") {
  const PdmpModel ou = builtin_model("two-regime-ou");
  const HypothesisConstants c =
      HypothesisConstants::from_primaries(1.0, 0.0, 1.0, 0.25, 1.0 / 3.0, 1.0);
  const std::vector<HybridState> x_grid{HybridState{{0.0}, 0}, HybridState{{1.0}, 0},
                                        HybridState{{3.0}, 0}};
  const GenlapResult res = check_genlap(ou, c, x_grid, {1.0, 5.0, 10.0}, 4000, RngStream(9));
  CHECK(res.rows.size() == 9);
  CHECK(res.pass);

  // anchored start: the series stays below C + 4 stderr
  const GenlapResult anchored =
      check_genlap(ou, c, {ou.anchor_state(0)}, {1.0, 5.0, 10.0}, 4000, RngStream(10));
  for (const auto& row : anchored.rows) CHECK(row.estimate <= c.C_lemma + 4.0 * row.std_err);
}

TEST_CASE("probe_ergodicity recovers the contract-multijump decay rate") {
  const PdmpModel cm = builtin_model("contract-multijump");
  const oracles::ContractFacts facts;
  const std::vector<double> t_grid{1.0, 1.5, 2.0, 2.5, 3.0};
  const ErgodicityEstimate erg = probe_ergodicity(cm, HybridState{{4.0}, 0}, HybridState{{0.0}, 0},
                                                  t_grid, 2000, 192, RngStream(11));
  CHECK_FALSE(erg.no_signal);
  CHECK(erg.gamma_hat == doctest::Approx(facts.mean_decay_rate()).epsilon(0.25));
  CHECK(erg.kappa_hat > 0.0);
}

TEST_CASE("probe_ergodicity: identical starts flag no signal") {
  const PdmpModel ou = builtin_model("two-regime-ou");
  const ErgodicityEstimate erg = probe_ergodicity(ou, HybridState{{1.0}, 0}, HybridState{{1.0}, 0},
                                                  {0.5, 1.0, 1.5, 2.0}, 400, 64, RngStream(12));
  CHECK(erg.no_signal);
}

TEST_CASE("probe_ergodicity on two-regime-ou: good fit, near-monotone decay") {
  const PdmpModel ou = builtin_model("two-regime-ou");
  const std::vector<double> t_grid{0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
  const ErgodicityEstimate erg = probe_ergodicity(ou, HybridState{{5.0}, 0}, HybridState{{0.0}, 0},
                                                  t_grid, 2000, 192, RngStream(13));
  CHECK_FALSE(erg.no_signal);
  CHECK(erg.fit_r2 >= 0.9);
  for (std::size_t j = 1; j < erg.distances.size(); ++j)
    CHECK(erg.distances[j] <= erg.distances[j - 1] + 2.0 * (erg.noise_floor + 0.02));
}
