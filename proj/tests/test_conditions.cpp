#include <doctest.h>

#include <cmath>
#include <random>

#include "rmfg/blocks.hpp"
#include "rmfg/conditions.hpp"
#include "rmfg/errors.hpp"
#include "rmfg/riccati.hpp"
#include "rmfg/worst_case.hpp"
#include "support.hpp"

using namespace rmfg;

namespace {

ModelParams random_scalar(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const double T = 0.5 + 2.5 * U(rng);
  return test::scalar(-1 + 2 * U(rng), 0.5 + U(rng), -0.5 + U(rng), 0.3, 1.5 * U(rng), 1,
                      2 * U(rng), 0.5 + U(rng), 0.2 + 1.8 * U(rng), U(rng), T, 1);
}

}  // namespace

TEST_CASE("(H1): determinant and Riccati tests agree on random scalar data") {
  std::mt19937_64 rng(2718);
  int agree = 0, trues = 0;
  for (int i = 0; i < 20; ++i) {
    const auto p = random_scalar(rng);
    const TimeGrid g(p.T, 1000);
    const auto d = check_h1_determinant(p, g);
    agree += d.verdict == check_h1_riccati(p, g);
    trues += d.verdict;
  }
  CHECK(agree == 20);
  CHECK(trues > 0);
  CHECK(trues < 20);
}

TEST_CASE("(H1) block determinant is 1 at t = 0 and matches the closed forms") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 5; ++i) CHECK(h1_block_det(random_scalar(rng), 0.0) == doctest::Approx(1.0));
  CHECK(h1_block_det(test::planar(), 0.0) == doctest::Approx(1.0));
  const auto p = test::scalar(-0.5, 1, 0.25, 0.3, 0.8, 1, 1, 1.5, 1, 0, 10, 1);
  for (double t : {0.0, 1.0, 5.0, 10.0}) {
    const double want = (4.0 / 3.0) * std::exp(0.15 * t) - (1.0 / 3.0) * std::exp(-0.15 * t);
    CHECK(std::abs(h1_block_det(p, t) - want) <= 1e-12 * want);
  }
  const auto r = check_h1_determinant(p, TimeGrid(10.0, 100));
  CHECK(r.verdict);
  CHECK(r.margin == doctest::Approx(1.0));
  CHECK(r.dets.size() == 101);
}

TEST_CASE("(H2) with B = 0 reduces to lambda_min(R)") {
  auto p = test::planar();
  p.B = Matrix::Zero(2, 2);
  p.R = Matrix{{2.0, 0.3}, {0.3, 0.7}};
  const auto r = check_h2(p, TimeGrid(1.0, 64), 8);
  CHECK(r.delta0 == doctest::Approx(smallest_eigenvalue(p.R)).epsilon(1e-10));
  CHECK(r.delta0_doubled == doctest::Approx(smallest_eigenvalue(p.R)).epsilon(1e-10));
  CHECK(r.verdict);
}

TEST_CASE("(H2) Gram matrix: symmetry and agreement with the form") {
  const auto p = test::planar();
  const TimeGrid g(1.0, 64);
  const int K = 8;
  const Matrix G = assemble_h2_form(p, g, K);
  CHECK(G.rows() == K);
  CHECK((G - G.transpose()).norm() <= 1e-12 * G.norm());
  std::mt19937_64 rng(9);
  std::normal_distribution<double> N(0.0, 1.0);
  Vector c(K);
  for (int j = 0; j < K; ++j) c(j) = N(rng);
  const double height = std::sqrt(K / p.T);
  const double value = h2_form_value(p, g, [&](std::size_t k) {
    return Vector::Constant(1, c(static_cast<int>(k) * K / g.n_steps()) * height);
  });
  CHECK(value == doctest::Approx(c.dot(G * c)).epsilon(1e-10));
}

TEST_CASE("(H2) Galerkin estimate is stable under basis doubling") {
  const auto r = check_h2(test::ex22(), TimeGrid(1.3, 2000), 32);
  CHECK(r.verdict);
  CHECK(std::abs(r.delta0 - r.delta0_doubled) <= 1e-3 * r.delta0);
  CHECK(r.delta0 > 1.0);
}

TEST_CASE("concavity of the worst-case functional tracks (H1)") {
  // With G = Gamma = 0 the indefinite Riccati equation escapes at T = 1.2092.
  for (double T : {0.6, 1.0, 1.5, 2.0}) {
    auto p = test::ex22(T);
    p.G.setZero();
    p.Gamma.setZero();
    const TimeGrid g(T, 400);
    const WorstCaseKernel k(p, g);
    CHECK(k.concave() == check_h1_riccati(p, g));
    CHECK(k.concave() == (T < 1.2092));
  }
}

TEST_CASE("C_q bound implies (H2)") {
  std::mt19937_64 rng(77);
  int with_bound = 0;
  for (int i = 0; i < 40; ++i) {
    auto p = random_scalar(rng);
    p.H.setZero();
    p.T *= 0.3;
    const TimeGrid g(p.T, 400);
    if (!check_h1_riccati(p, g)) continue;
    const auto cq = compute_Cq_bound(p, g);
    if (!cq.verdict) continue;
    ++with_bound;
    CHECK(check_h2(p, g, 16).verdict);
  }
  CHECK(with_bound >= 3);
  auto p = test::ex22();
  p.H = test::s(0.5);
  CHECK_THROWS_AS(compute_Cq_bound(p, TimeGrid(1.3, 100)), NotApplicableError);
}

TEST_CASE("contraction constants") {
  const auto p = test::ex22();
  const TimeGrid g(1.3, 2000);
  const auto K = solve_indefinite_K(p, g);
  const auto c = check_contraction(p, K, g);
  CHECK(c.c1 == doctest::Approx(0.171417).epsilon(1e-4));
  CHECK(c.lhs < 0.861493);
  CHECK(c.verdict);
  auto q = p;
  q.R = p.R / 10.0;
  CHECK_FALSE(check_contraction(q, solve_indefinite_K(q, g), g).verdict);
}

TEST_CASE("BVP solvability determinant") {
  const auto p = test::scalar(0.5, 1, 0.25, 0.3, 1.0, 1, 1, 1.5, 1, 0, 10, 1);
  const auto b = check_bvp_solvability(p);
  CHECK(std::abs(b.det - std::exp(-12.5)) <= 1e-12);
  CHECK(b.verdict);
  const auto all = check_all(test::ex22(), SolverSettings{});
  CHECK(all.all_required());
  CHECK(all.contraction.has_value());
  CHECK(all.cq.has_value());
}
