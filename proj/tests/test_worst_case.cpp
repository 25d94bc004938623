#include <doctest.h>

#include <cmath>

#include "rmfg/linear_flow.hpp"
#include "rmfg/simulator.hpp"
#include "rmfg/strategy.hpp"
#include "rmfg/worst_case.hpp"
#include "support.hpp"

using namespace rmfg;

TEST_CASE("kernel Hessian against direct assembly") {
  const auto p = test::planar();
  const TimeGrid g(p.T, 12);
  const WorstCaseKernel k(p, g);
  const auto n = p.A.rows();
  const int K = g.n_steps();
  const auto maps = step_maps(p.A + p.G, g.dt());
  const Matrix Qh = qhat(p);
  // Shift response to a unit disturbance on one step and one component.
  std::vector<Trajectory> z;
  for (int i = 0; i < K; ++i) {
    for (Eigen::Index c = 0; c < n; ++c) {
      z.push_back(propagate(maps, [&](std::size_t s) {
        Vector f = Vector::Zero(n);
        if (static_cast<int>(s) == i) f(c) = 1.0;
        return f;
      }, Vector::Zero(n), g));
    }
  }
  Matrix H(K * n, K * n);
  for (std::size_t a = 0; a < z.size(); ++a) {
    for (std::size_t b = 0; b < z.size(); ++b) {
      double v = 0.0;
      for (std::size_t m = 0; m < g.size(); ++m) {
        const double w = (m == 0 || m + 1 == g.size()) ? 0.5 : 1.0;
        v += w * g.dt() * z[a][m].col(0).dot(Qh * z[b][m].col(0));
      }
      v += z[a].back().col(0).dot(p.H * z[b].back().col(0));
      if (a == b) v -= g.dt() / p.gamma;
      H(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = 2.0 * v;
    }
  }
  CHECK((k.hessian() - H).norm() <= 1e-12 * H.norm());
  CHECK(k.concave());
}

TEST_CASE("stationarity and concavity at the equilibrium") {
  const auto p = test::ex22();
  const TimeGrid g(1.3, 400);
  const auto field = synthesize(p, g);
  const auto r = worst_case_f(p, field, shared_init(p.m0), 8, g, 0, 0, 1);
  CHECK(r.hessian_definite);
  CHECK(r.grad_norm <= 1e-8 * r.grad_scale);
  CHECK(r.J_wo >= r.J0);
  const WorstCaseKernel k(p, g);
  CHECK(worst_case_gradient(k, Vector::Zero(g.n_steps()), Vector::Zero(g.n_steps())) == 0.0);
}

TEST_CASE("small gamma: the adversary is nearly powerless") {
  auto p = test::ex22();
  double prev_gain = 1e300;
  for (double gamma : {0.1, 0.01, 0.001}) {
    p.gamma = gamma;
    const TimeGrid g(1.3, 400);
    const auto field = synthesize(p, g);
    const auto r = worst_case_f(p, field, shared_init(p.m0), 4, g, 0, 0, 1);
    const double gain = r.J_wo - r.J0;
    CHECK(gain >= 0.0);
    CHECK(gain < prev_gain);
    CHECK(r.f_steps.lpNorm<Eigen::Infinity>() <= 5.0 * gamma);
    prev_gain = gain;
  }
  CHECK(prev_gain <= 1e-3);
}

TEST_CASE("one uncoupled agent: f* equals gamma pbar") {
  auto p = test::ex22(1.0);
  p.G.setZero();
  p.Gamma.setZero();
  const TimeGrid g(1.0, 2000);
  const auto field = synthesize(p, g);
  const auto r = worst_case_f(p, field, shared_init(p.m0), 1, g, 0, 0, 1);
  const auto& fh = field.base().f_hat;
  double err = 0.0, scale = 0.0;
  for (int i = 0; i < g.n_steps(); ++i) {
    const double want = fh.sample(g.knot(i) + 0.5 * g.dt())(0, 0);
    err = std::max(err, std::abs(r.f_steps(i) - want));
    scale = std::max(scale, std::abs(want));
  }
  CHECK(err <= 1e-4 * scale);
}

TEST_CASE("worst-case cost agrees with Monte Carlo") {
  const auto p = test::ex22();
  const TimeGrid g(1.3, 200);
  const auto field = synthesize(p, g);
  const auto r = worst_case_f(p, field, shared_init(p.m0), 4, g, 1, 800, 3);
  REQUIRE(r.mc_J_wo.has_value());
  CHECK(std::abs(*r.mc_J_wo - r.J_wo) <= 3.0 * *r.mc_se + 1e-2);
}

TEST_CASE("moments at f = 0 match a noiseless population") {
  auto p = test::ex22();
  p.D.setZero();
  const TimeGrid g(1.3, 2000);
  const auto field = synthesize(p, g);
  const auto m = agent_moments(p, field, shared_init(p.m0), 6, g, 0);
  CHECK(m.e_var.back() == doctest::Approx(0.0));
  CHECK(m.xT_var == doctest::Approx(0.0));
  const auto zero = Trajectory::constant(g, Vector::Zero(1));
  const auto run = simulate_population(p, field, shared_init(p.m0), zero, 6, 1, g);
  for (std::size_t k = 0; k < g.size(); k += 100) {
    const Vector e = run.paths[0].col(static_cast<Eigen::Index>(k)) - p.Gamma * run.x_avg[k] - p.eta;
    CHECK((m.e_mean[k] - e).norm() <= 2e-3);
  }
  CHECK(m.J0 == doctest::Approx(evaluate_cost(run, p, 0, zero).total).epsilon(2e-3));
}
