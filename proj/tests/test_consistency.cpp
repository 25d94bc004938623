#include <doctest.h>

#include <cmath>

#include "rmfg/blocks.hpp"
#include "rmfg/consistency.hpp"
#include "rmfg/errors.hpp"
#include "rmfg/riccati.hpp"
#include "support.hpp"

using namespace rmfg;

TEST_CASE("zero data give the zero solution") {
  auto p = test::ex22();
  p.eta.setZero();
  p.m0.setZero();
  const TimeGrid g(1.3, 200);
  const auto sh = solve_bvp_shooting(p, g);
  CHECK(sh.m.max_norm() == 0.0);
  CHECK(sh.p.max_norm() == 0.0);
  CHECK(sh.y.max_norm() == 0.0);
  const auto fp = fixed_point_iterate(p, solve_indefinite_K(p, g), g);
  CHECK(fp.m.max_norm() == 0.0);
}

TEST_CASE("shooting and fixed point agree") {
  const auto p = test::ex22();
  const TimeGrid g(1.3, 2000);
  const auto sh = solve_bvp_shooting(p, g);
  const auto fp = fixed_point_iterate(p, solve_indefinite_K(p, g), g);
  CHECK(sup_distance(sh.m, fp.m) <= 1e-8);
  CHECK(sup_distance(sh.p, fp.p) <= 1e-8);
  CHECK(sup_distance(sh.y, fp.y) <= 1e-8);
  CHECK(sup_distance(sh.u_bar, fp.u_bar) <= 1e-8);
  CHECK(observed_ratio(fp) <= 0.92);
  CHECK(fp.iterations > 1);
  CHECK(fp.increments.size() == static_cast<std::size_t>(fp.iterations));
}

TEST_CASE("boundary conditions and residual") {
  for (const auto& p : {test::ex22(), test::planar()}) {
    const TimeGrid g(p.T, 1000);
    const auto sh = solve_bvp_shooting(p, g);
    CHECK((sh.m.front() - p.m0).norm() <= 1e-12);
    CHECK((sh.p.back() - p.H * sh.m.back()).norm() <= 1e-10);
    CHECK((sh.y.back() + p.H * sh.m.back()).norm() <= 1e-10);
    CHECK(sh.residual <= 1e-6);
    CHECK(consistency_residual(p, sh.m, sh.p, sh.y) == doctest::Approx(sh.residual));
  }
}

TEST_CASE("fundamental matrix inverse") {
  for (const auto& p : {test::ex22(), test::planar()}) {
    const Matrix M = consistency_matrix(p);
    const auto n = M.rows();
    for (double T : {0.5, 1.3, 5.0}) {
      CHECK((mat_exp(M, T) * mat_exp(M, -T) - Matrix::Identity(n, n)).norm() <= 1e-9);
    }
  }
}

TEST_CASE("equivalence with the lifted system") {
  for (double T : {0.5, 1.0, 5.0}) {
    const auto p = test::ex22(T);
    const TimeGrid g(T, 2000);
    const auto sh = solve_bvp_shooting(p, g);
    const auto r = validate_equivalences(sh, p, g);
    CHECK(r.passed);
    CHECK(r.m_gap <= 1e-7 * r.scale);
  }
  const auto q = test::planar();
  const TimeGrid g(q.T, 500);
  CHECK(validate_equivalences(solve_bvp_shooting(q, g), q, g).passed);
}

TEST_CASE("equivalence check rejects a perturbed solution") {
  const auto p = test::ex22();
  const TimeGrid g(1.3, 500);
  auto sh = solve_bvp_shooting(p, g);
  sh.m = sh.m.map([](std::size_t, const Matrix& v) -> Matrix { return v * 1.001; });
  CHECK_THROWS_AS(validate_equivalences(sh, p, g), EquivalenceViolation);
}

TEST_CASE("fixed point gives up after max_iter") {
  auto p = test::ex22();
  p.R = p.R / 20.0;
  const TimeGrid g(1.3, 200);
  CHECK_THROWS_AS(fixed_point_iterate(p, solve_indefinite_K(p, g), g, 1e-10, 5), NonConvergenceError);
}
