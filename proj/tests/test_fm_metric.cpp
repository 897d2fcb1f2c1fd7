#include <doctest.h>

#include <array>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "pdmpclt/fm_distance.hpp"
#include "pdmpclt/model.hpp"
#include "pdmpclt/statistics.hpp"

using namespace pdmpclt;

namespace {

const HybridMetric kMetric{euclidean, 1.0};

EmpiricalMeasure cloud(std::vector<double> ys, std::vector<double> ws,
                       std::vector<int> regimes = {}) {
  std::vector<HybridState> pts;
  for (std::size_t i = 0; i < ys.size(); ++i)
    pts.push_back(HybridState{{ys[i]}, regimes.empty() ? 0 : regimes[i]});
  return EmpiricalMeasure::make(std::move(pts), std::move(ws));
}

EmpiricalMeasure random_cloud(RngStream& rng, std::size_t n, double span = 3.0) {
  std::vector<HybridState> pts;
  std::vector<double> ws;
  for (std::size_t i = 0; i < n; ++i) {
    pts.push_back(HybridState{{rng.uniform(-span, span)}, static_cast<int>(rng.next_u64() % 2)});
    ws.push_back(rng.uniform(0.1, 1.0));
  }
  return EmpiricalMeasure::make(std::move(pts), std::move(ws));
}

}  // namespace

TEST_CASE("identical measures have distance zero") {
  RngStream rng(100);
  const EmpiricalMeasure mu = random_cloud(rng, 17);
  CHECK(fm_distance(mu, mu, kMetric) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("point masses: min(2, rho) on 100 random pairs") {
  RngStream rng(7);
  for (int rep = 0; rep < 100; ++rep) {
    const HybridState x{{rng.uniform(-5, 5)}, static_cast<int>(rng.next_u64() % 3)};
    const HybridState y{{rng.uniform(-5, 5)}, static_cast<int>(rng.next_u64() % 3)};
    const auto dx = EmpiricalMeasure::uniform({x});
    const auto dy = EmpiricalMeasure::uniform({y});
    const double expect = std::min(2.0, kMetric(x, y));
    CHECK(fm_distance(dx, dy, kMetric) == doctest::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("three-point instances match vertex enumeration (50-case suite)") {
  RngStream rng(42);
  for (int rep = 0; rep < 50; ++rep) {
    std::array<HybridState, 3> pts;
    for (auto& p : pts)
      p = HybridState{{rng.uniform(-2.5, 2.5)}, static_cast<int>(rng.next_u64() % 2)};
    std::array<double, 3> wa{}, wb{};
    double sa = 0.0, sb = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
      wa[k] = rng.uniform(0.05, 1.0);
      wb[k] = rng.uniform(0.05, 1.0);
      sa += wa[k];
      sb += wb[k];
    }
    std::array<double, 3> net{};
    std::array<std::array<double, 3>, 3> rho{};
    for (std::size_t k = 0; k < 3; ++k) {
      net[k] = wa[k] / sa - wb[k] / sb;
      for (std::size_t l = 0; l < 3; ++l) rho[k][l] = kMetric(pts[k], pts[l]);
    }
    const double oracle = oracles::fm3_vertex_enumeration(net, rho);

    const auto mu = EmpiricalMeasure::make({pts[0], pts[1], pts[2]}, {wa[0], wa[1], wa[2]});
    const auto nu = EmpiricalMeasure::make({pts[0], pts[1], pts[2]}, {wb[0], wb[1], wb[2]});
    CHECK(fm_distance(mu, nu, kMetric) == doctest::Approx(oracle).epsilon(1e-6));
  }
}

TEST_CASE("symmetry and the [0,2] range on random instances") {
  RngStream rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const EmpiricalMeasure mu = random_cloud(rng, 12, 8.0);
    const EmpiricalMeasure nu = random_cloud(rng, 9, 8.0);
    const double ab = fm_distance(mu, nu, kMetric);
    const double ba = fm_distance(nu, mu, kMetric);
    CHECK(std::abs(ab - ba) <= 1e-9);
    CHECK(ab >= 0.0);
    CHECK(ab <= 2.0 + 1e-12);
  }
}

TEST_CASE("triangle inequality on random triples") {
  RngStream rng(12);
  for (int rep = 0; rep < 15; ++rep) {
    const EmpiricalMeasure a = random_cloud(rng, 10);
    const EmpiricalMeasure b = random_cloud(rng, 10);
    const EmpiricalMeasure c = random_cloud(rng, 10);
    const double ab = fm_distance(a, b, kMetric);
    const double bc = fm_distance(b, c, kMetric);
    const double ac = fm_distance(a, c, kMetric);
    CHECK(ac <= ab + bc + 1e-9);
  }
}

TEST_CASE("dominated by W1 of the same clouds (single regime, line oracle)") {
  RngStream rng(13);
  for (int rep = 0; rep < 15; ++rep) {
    std::vector<double> ya, yb, wa, wb;
    std::vector<int> ra, rb;
    const std::size_t n = 4 + rng.next_u64() % 17;  // up to 20
    for (std::size_t i = 0; i < n; ++i) {
      ya.push_back(rng.uniform(-4, 4));
      yb.push_back(rng.uniform(-4, 4));
      wa.push_back(rng.uniform(0.05, 1.0));
      wb.push_back(rng.uniform(0.05, 1.0));
      ra.push_back(0);
      rb.push_back(0);
    }
    const EmpiricalMeasure mu = cloud(ya, wa, ra);
    const EmpiricalMeasure nu = cloud(yb, wb, rb);
    std::vector<std::pair<double, double>> pa, pb;
    for (std::size_t i = 0; i < n; ++i) {
      pa.emplace_back(ya[i], mu.weights[i]);
      pb.emplace_back(yb[i], nu.weights[i]);
    }
    const double w1 = oracles::w1_line(pa, pb);
    CHECK(fm_distance(mu, nu, kMetric) <= w1 + 1e-9);
  }
}

TEST_CASE("shrinking all distances cannot increase the distance") {
  RngStream rng(14);
  for (int rep = 0; rep < 10; ++rep) {
    EmpiricalMeasure mu = random_cloud(rng, 14);
    EmpiricalMeasure nu = random_cloud(rng, 14);
    const double before = fm_distance(mu, nu, kMetric);
    for (auto& p : mu.points) p.y[0] *= 0.5;
    for (auto& p : nu.points) p.y[0] *= 0.5;
    // regimes unchanged; halving y shrinks every pairwise distance
    const double after = fm_distance(mu, nu, kMetric);
    CHECK(after <= before + 1e-9);
  }
}

TEST_CASE("dual certificate is feasible and attains the value") {
  RngStream rng(15);
  const EmpiricalMeasure mu = random_cloud(rng, 9);
  const EmpiricalMeasure nu = random_cloud(rng, 7);
  FmOptions opts;
  opts.want_dual = true;
  const FmResult res = fm_distance_full(mu, nu, kMetric, opts);
  REQUIRE(res.dual.size() == res.support.size());
  for (std::size_t k = 0; k < res.dual.size(); ++k) {
    CHECK(std::abs(res.dual[k]) <= 1.0 + 1e-12);
    for (std::size_t l = 0; l < res.dual.size(); ++l)
      CHECK(std::abs(res.dual[k] - res.dual[l]) <=
            kMetric(res.support[k], res.support[l]) + 1e-9);
  }
}

TEST_CASE("support cap is enforced") {
  RngStream rng(16);
  const EmpiricalMeasure mu = random_cloud(rng, 30);
  const EmpiricalMeasure nu = random_cloud(rng, 30);
  FmOptions opts;
  opts.support_cap = 40;
  CHECK_THROWS_AS(fm_distance(mu, nu, kMetric, opts), std::invalid_argument);
}

TEST_CASE("subsample: single point, uniform weights, CLT-consistent means") {
  RngStream rng(17);
  const EmpiricalMeasure mu = random_cloud(rng, 50);

  RngStream r1 = rng.split(1);
  const EmpiricalMeasure one = subsample(mu, 1, r1);
  CHECK(one.size() == 1);
  CHECK(one.weights[0] == 1.0);

  // mean of V under the subsample stays within 4 sd/sqrt(m) of the full mean
  const PdmpModel model = builtin_model("two-regime-ou");
  auto mean_v = [&](const EmpiricalMeasure& m_) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m_.size(); ++i)
      acc += m_.weights[i] * model.lyapunov(m_.points[i]);
    return acc;
  };
  const double full_mean = mean_v(mu);
  double sd = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double v = model.lyapunov(mu.points[i]);
    sd += mu.weights[i] * (v - full_mean) * (v - full_mean);
  }
  sd = std::sqrt(sd);
  const std::size_t m = 400;
  RngStream r2 = rng.split(2);
  const EmpiricalMeasure sub = subsample(mu, m, r2);
  CHECK(std::abs(mean_v(sub) - full_mean) <= 4.0 * sd / std::sqrt(static_cast<double>(m)));
}
