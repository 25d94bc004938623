#include <doctest.h>

#include <cmath>

#include "rmfg/consistency.hpp"
#include "rmfg/noise.hpp"
#include "rmfg/riccati.hpp"
#include "rmfg/strategy.hpp"
#include "support.hpp"

using namespace rmfg;

TEST_CASE("agent limit system at the population mean reproduces the consistency solution") {
  const auto p = test::ex22();
  const TimeGrid g(1.3, 1000);
  const auto cs = solve_bvp_shooting(p, g);
  const auto als = solve_agent_limit(p, cs, p.m0, g);
  CHECK(sup_distance(als.x_bar, cs.m) <= 1e-9);
  CHECK(sup_distance(als.m_bar, cs.m) <= 1e-9);
  CHECK(sup_distance(als.p_bar, cs.p) <= 1e-9);
  CHECK(sup_distance(als.y_bar, cs.y) <= 1e-9);
  CHECK(sup_distance(als.u_bar_star, cs.u_bar) <= 1e-9);
}

TEST_CASE("reconstruction identity -P xbar + phi = ybar") {
  for (const auto& p : {test::ex22(), test::planar()}) {
    const TimeGrid g(p.T, 1000);
    const auto field = synthesize(p, g);
    const auto& fs = field.base();
    CHECK(reconstruction_error(fs) <= 1e-9 * (1.0 + fs.limit.y_bar.max_norm()));
    CHECK(fs.phi.back().norm() == 0.0);
    CHECK(fs.P.P.back() == p.H);
    const Vector d = Vector::Constant(p.A.rows(), 0.3);
    const auto other = field.at(p.m0 + d);
    CHECK(reconstruction_error(other) <= 1e-9 * (1.0 + other.limit.y_bar.max_norm()));
  }
}

TEST_CASE("strategies are affine in the initial mean") {
  const auto p = test::planar();
  const TimeGrid g(p.T, 500);
  const auto field = synthesize(p, g);
  const Vector d{{0.4, -0.7}};
  const auto direct_limit = solve_agent_limit(p, field.consistency(), p.m0 + d, g);
  const auto direct = build_feedback(p, direct_limit, g);
  const auto via = field.at(p.m0 + d);
  CHECK(sup_distance(via.phi, direct.phi) <= 1e-10);
  CHECK(sup_distance(via.limit.x_bar, direct.limit.x_bar) <= 1e-10);
  CHECK(sup_distance(via.f_hat, direct.f_hat) <= 1e-10);
  const auto a = field.at(p.m0);
  const auto b = field.at(p.m0 + 2 * d);
  for (std::size_t k = 0; k < g.size(); k += 50) {
    CHECK((b.phi[k] - 2 * via.phi[k] + a.phi[k]).norm() <= 1e-10);
  }
  // Deviations from the consistency solution scale linearly in the initial offset.
  const double d1 = sup_distance(via.limit.m_bar, a.limit.m_bar);
  const double d2 = sup_distance(b.limit.m_bar, a.limit.m_bar);
  CHECK(d1 > 0.0);
  CHECK(d2 / d1 == doctest::Approx(2.0).epsilon(1e-2));
  CHECK(sup_distance(b.limit.x_bar, a.limit.x_bar) / sup_distance(via.limit.x_bar, a.limit.x_bar) ==
        doctest::Approx(2.0).epsilon(1e-2));
}

TEST_CASE("fhat = gamma pbar maximizes the limit cost") {
  const auto p = test::ex22();
  const TimeGrid g(1.3, 1000);
  const auto field = synthesize(p, g);
  const auto& fs = field.base();
  CHECK(sup_distance(fs.f_hat, fs.limit.p_bar.map([&](std::size_t, const Matrix& v) -> Matrix {
          return p.gamma * v;
        })) == 0.0);
  const double J = limit_cost(p, fs.limit, fs, g, true, fs.f_hat).total;
  CHECK(J == doctest::Approx(limit_cost(p, fs.limit, fs, g, true).total).epsilon(1e-12));
  for (int mode = 1; mode <= 3; ++mode) {
    const auto bump = [&](double eps) {
      return fs.f_hat.map([&](std::size_t k, const Matrix& v) -> Matrix {
        return v + test::s(eps * std::cos(mode * g.knot(k)));
      });
    };
    const double up = limit_cost(p, fs.limit, fs, g, true, bump(0.1)).total;
    const double down = limit_cost(p, fs.limit, fs, g, true, bump(-0.1)).total;
    CHECK(up < J);
    CHECK(down < J);
    CHECK(std::abs(up - down) <= 1e-6 * std::abs(J));
  }
}

TEST_CASE("limit cost agrees with Monte Carlo on the limit model") {
  const auto p = test::ex22();
  const TimeGrid g(1.3, 400);
  const auto field = synthesize(p, g);
  const auto& fs = field.base();
  const auto lc = limit_cost(p, fs.limit, fs, g, true);
  const NoiseSource noise(8);
  const int paths = 4000;
  const double dt = g.dt();
  double m = 0.0, m2 = 0.0;
  for (int i = 0; i < paths; ++i) {
    const auto w = noise.brownian(0, static_cast<std::uint32_t>(i), 1, g);
    double x = p.m0(0), J = 0.0;
    for (int k = 0; k <= g.n_steps(); ++k) {
      const auto kk = static_cast<std::size_t>(k);
      const double u = fs.control(p, kk, test::sv(x))(0);
      const double mb = fs.limit.m_bar[kk](0, 0);
      const double fh = fs.f_hat[kk](0, 0);
      const double e = x - p.Gamma(0, 0) * mb - p.eta(0);
      const double run = e * e * p.Q(0, 0) + u * u * p.R(0, 0) - fh * fh / p.gamma;
      J += (k == 0 || k == g.n_steps() ? 0.5 : 1.0) * run * dt;
      if (k < g.n_steps()) {
        x += (p.A(0, 0) * x + p.B(0, 0) * u + p.G(0, 0) * mb + fh) * dt + p.D(0, 0) * w.increments(0, k);
      }
    }
    J += p.H(0, 0) * x * x;
    m += J;
    m2 += J * J;
  }
  m /= paths;
  const double se = std::sqrt((m2 / paths - m * m) / paths);
  CHECK(lc.fluctuation_part > 0.0);
  CHECK(std::abs(m - lc.total) <= 3.0 * se + 5e-3);
}
