#include <doctest.h>

#include <cmath>

#include "rmfg/parallel.hpp"
#include "rmfg/simulator.hpp"
#include "rmfg/strategy.hpp"
#include "support.hpp"

using namespace rmfg;

TEST_CASE("without noise every agent follows the same path") {
  auto p = test::ex22();
  p.D.setZero();
  const TimeGrid g(1.3, 200);
  const auto field = synthesize(p, g);
  const auto run = simulate_population(p, field, shared_init(p.m0), field.base().f_hat, 7, 1, g);
  for (std::size_t i = 1; i < 7; ++i) {
    CHECK(run.paths[i] == run.paths[0]);
    CHECK(run.controls[i] == run.controls[0]);
  }
  // Reference states coincide with the limit mean, so the population tracks it.
  CHECK(sup_distance(run.ref_avg, field.base().limit.x_bar) <= 1e-2);
}

TEST_CASE("bit-exact across thread counts") {
  const auto p = test::planar();
  const TimeGrid g(1.0, 100);
  const auto field = synthesize(p, g);
  InitSpec init;
  init.mode = InitMode::Random;
  init.means = {p.m0, Vector(p.m0 * 0.5)};
  init.covariances = {Matrix::Identity(2, 2) * 0.05};
  SimulationOptions o;
  o.replication = 3;
  std::vector<PopulationRun> runs;
  for (unsigned t : {1u, 2u, 5u}) {
    set_thread_count(t);
    runs.push_back(simulate_population(p, field, init, field.base().f_hat, 33, 9, g, o));
  }
  set_thread_count(0);
  for (std::size_t r = 1; r < runs.size(); ++r) {
    CHECK(runs[r].x_avg.values() == runs[0].x_avg.values());
    for (std::size_t i = 0; i < 33; ++i) {
      CHECK(runs[r].paths[i] == runs[0].paths[i]);
      CHECK(runs[r].references[i] == runs[0].references[i]);
    }
  }
  const auto other = simulate_population(p, field, init, field.base().f_hat, 33, 10, g, o);
  CHECK(other.paths[0] != runs[0].paths[0]);
}

TEST_CASE("deviating with the equilibrium law changes nothing") {
  const auto p = test::ex22();
  const TimeGrid g(1.3, 100);
  const auto field = synthesize(p, g);
  SimulationOptions o;
  o.deviation = equilibrium_law(p, field.base());
  o.deviation_agent = 2;
  const auto a = simulate_population(p, field, shared_init(p.m0), field.base().f_hat, 5, 4, g);
  const auto b = simulate_population(p, field, shared_init(p.m0), field.base().f_hat, 5, 4, g, o);
  for (std::size_t i = 0; i < 5; ++i) CHECK((a.paths[i] - b.paths[i]).norm() <= 1e-13);
}

TEST_CASE("cost is homogeneous of degree two without noise") {
  auto p = test::ex22();
  p.D.setZero();
  const TimeGrid g(1.3, 200);
  auto cost = [&](const ModelParams& q) {
    const auto field = synthesize(q, g);
    const auto run = simulate_population(q, field, shared_init(q.m0), field.base().f_hat, 4, 1, g);
    return evaluate_cost(run, q, 0, field.base().f_hat).total;
  };
  auto q = p;
  q.m0 *= 2.0;
  q.eta *= 2.0;
  const double c1 = cost(p), c2 = cost(q);
  CHECK(c2 == doctest::Approx(4.0 * c1).epsilon(1e-10));
}

TEST_CASE("one agent without coupling reproduces the limit cost") {
  auto p = test::ex22();
  p.D.setZero();
  p.G.setZero();
  p.Gamma.setZero();
  p.T = 1.0;
  auto err = [&](int steps) {
    const TimeGrid g(1.0, steps);
    const auto field = synthesize(p, g);
    const auto& fs = field.base();
    const auto run = simulate_population(p, field, shared_init(p.m0), fs.f_hat, 1, 1, g);
    return std::abs(evaluate_cost(run, p, 0, fs.f_hat).total - limit_cost(p, fs.limit, fs, g, false).total);
  };
  const double e1 = err(200), e2 = err(400);
  CHECK(e1 <= 2e-2);
  CHECK(e2 <= 0.6 * e1);
}

TEST_CASE("random initial states have the prescribed moments") {
  const auto p = test::ex22();
  InitSpec init;
  init.mode = InitMode::Random;
  init.means = {test::sv(2.0)};
  init.covariances = {test::s(0.25)};
  double m = 0, m2 = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double x = initial_state(init, p, static_cast<std::size_t>(i), 5, 0)(0);
    m += x;
    m2 += x * x;
  }
  m /= n;
  const double v = m2 / n - m * m;
  CHECK(std::abs(m - 2.0) <= 4.0 * 0.5 / std::sqrt(n));
  CHECK(std::abs(v - 0.25) <= 4.0 * 0.25 * std::sqrt(2.0 / n));
  CHECK(initial_state(shared_init(p.m0), p, 3, 5, 0) == p.m0);
}

TEST_CASE("references-only runs keep no physical paths") {
  const auto p = test::ex22();
  const TimeGrid g(1.3, 50);
  const auto field = synthesize(p, g);
  SimulationOptions o;
  o.references_only = true;
  const auto run = simulate_population(p, field, shared_init(p.m0), field.base().f_hat, 3, 1, g, o);
  CHECK(run.paths.empty());
  CHECK(run.u_avg.size() == g.size());
  CHECK_THROWS(evaluate_cost(run, p, 0, field.base().f_hat));
}
