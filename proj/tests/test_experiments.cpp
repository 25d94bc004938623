#include <doctest.h>

#include <cmath>

#include "rmfg/errors.hpp"
#include "rmfg/experiments.hpp"
#include "support.hpp"

using namespace rmfg;

TEST_CASE("log-log fit recovers a power law") {
  const std::vector<double> x{8, 32, 128, 512};
  std::vector<double> y, se;
  for (double v : x) {
    y.push_back(3.0 * std::pow(v, -0.5));
    se.push_back(0.1 * y.back());
  }
  const auto f = fit_loglog(x, y, se);
  CHECK(f.slope == doctest::Approx(-0.5));
  CHECK(std::exp(f.intercept) == doctest::Approx(3.0));
  CHECK(f.slope_se > 0.0);
  CHECK(f.ci_lo < f.slope);
  CHECK(f.ci_hi > f.slope);
  CHECK_THROWS_AS(fit_loglog({1, 2}, {1, 2}, {}), Error);
  CHECK_THROWS_AS(fit_loglog({1, 2, 3}, {1, 0, 2}, {}), Error);
}

TEST_CASE("deviation family layout and determinism") {
  const auto p = test::ex22();
  const TimeGrid g(1.3, 100);
  const auto field = synthesize(p, g);
  const auto fam = deviation_family(p, field.base(), {}, 5);
  REQUIRE(fam.size() == 1 + 4 + 8);
  CHECK(fam.front().name == "self");
  const auto again = deviation_family(p, field.base(), {}, 5);
  for (std::size_t i = 0; i < fam.size(); ++i) CHECK(fam[i].law.l.values() == again[i].law.l.values());
}

TEST_CASE("Nash gaps: self is exactly zero, eps is nonnegative") {
  const auto p = test::ex22();
  const TimeGrid g(1.3, 200);
  const auto field = synthesize(p, g);
  const auto r = nash_gap_experiment(p, field, shared_init(p.m0), 16, g, {}, 4, 2);
  CHECK(r.rows.front().name == "self");
  CHECK(r.rows.front().gap == 0.0);
  CHECK(r.eps_hat >= 0.0);
  CHECK(r.eps_per_replication.size() == 4);
  double best = 0.0;
  for (const auto& row : r.rows) {
    if (row.name != "pilot best response") best = std::max(best, row.gap);
  }
  CHECK(r.eps_hat >= best);
}

TEST_CASE("exact shift best response gains O(1/N^2)") {
  const auto p = test::ex22();
  const TimeGrid g(1.3, 200);
  const auto field = synthesize(p, g);
  const WorstCaseKernel k(p, g);
  const auto a = subspace_best_response(p, field, shared_init(p.m0), 32, g, 4, &k);
  const auto b = subspace_best_response(p, field, shared_init(p.m0), 128, g, 4, &k);
  CHECK(a.convex);
  CHECK(a.dimension == 4);
  CHECK(a.gain > 0.0);
  CHECK(b.gain > 0.0);
  const double ratio = a.gain / b.gain;
  CHECK(ratio >= 12.0);
  CHECK(ratio <= 20.0);
}

TEST_CASE("convergence statistic tracks its CLT prediction") {
  const auto p = test::ex22();
  const TimeGrid g(1.3, 200);
  const auto field = synthesize(p, g);
  const auto r = convergence_experiment(p, field, shared_init(p.m0), g, {8, 32, 128}, 64, 4);
  REQUIRE(r.stat.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(std::abs(r.stat[i] - r.predicted[i]) <= 4.0 * r.stat_se[i] + 0.1 * r.predicted[i]);
  }
  CHECK(r.fit_valid);
  CHECK_THROWS_AS(random_initial_mode(p, field, shared_init(p.m0), g, {8, 32, 128}, 4, 1), Error);
}

TEST_CASE("random initial states average out at the same rate") {
  const auto p = test::ex22();
  const TimeGrid g(1.3, 200);
  const auto field = synthesize(p, g);
  InitSpec init;
  init.mode = InitMode::Random;
  init.means = {p.m0};
  init.covariances = {test::s(0.04)};
  const auto r = random_initial_mode(p, field, init, g, {8, 32, 128, 512}, 64, 6);
  CHECK(std::abs(r.convergence.fit.slope + 1.0) <= 0.2);
  CHECK(r.mean_offset == doctest::Approx(0.0));
}
