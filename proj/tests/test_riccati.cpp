#include <doctest.h>

#include <cmath>

#include "rmfg/errors.hpp"
#include "rmfg/riccati.hpp"
#include "support.hpp"

using namespace rmfg;

TEST_CASE("scalar closed form constants") {
  const auto cf = scalar_closed_form(0.75, 0.04, 1.0, 1.3);
  CHECK(cf.alpha == doctest::Approx(0.722842).epsilon(1e-6));
  CHECK(cf.lambda1 == doctest::Approx(-0.027158).epsilon(1e-4));
  CHECK(cf.lambda2 == doctest::Approx(-1.472842).epsilon(1e-6));
  // log(lambda2 / lambda1) / (2 alpha)
  CHECK(cf.Tmax == doctest::Approx(std::log(1.4728416 / 0.0271584) / (2 * 0.7228416)).epsilon(1e-6));
  CHECK(cf(1.3) == 0.0);
  CHECK_THROWS_AS(scalar_closed_form(0.5, 1.0, 1.0, 1.0), OscillatoryRegimeError);
}

TEST_CASE("indefinite P matches the closed form") {
  const auto p = test::ex22();
  const TimeGrid g(1.3, 2000);
  const auto sol = solve_indefinite_P(p, g);
  const auto cf = scalar_closed_form(0.75, 0.04, 1.0, 1.3);
  double err = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) err = std::max(err, std::abs(sol.P[k](0, 0) - cf(g.knot(k))));
  CHECK(err <= 1e-10);
  CHECK(sol.P.front()(0, 0) == doctest::Approx(-0.171417).epsilon(1e-5));
  CHECK(sol.kind == RiccatiKind::IndefiniteP);
  const auto K = solve_indefinite_K(p, g);
  CHECK(sup_distance(K.P, sol.P) == 0.0);
}

TEST_CASE("escape classification across horizons") {
  // Finite escape at log(lambda2/lambda1)/(2 alpha) = 2.7622.
  for (double T : {1.0, 2.0, 2.7}) CHECK_NOTHROW(solve_indefinite_P(test::ex22(T), TimeGrid(T, 4000)));
  for (double T : {2.8, 3.0}) CHECK_THROWS_AS(solve_indefinite_P(test::ex22(T), TimeGrid(T, 4000)), EscapeTimeError);
}

TEST_CASE("standard Riccati: tanh solution") {
  // P' - P^2 + 1 = 0, P(1) = 0 gives P(t) = tanh(1 - t).
  const auto p = test::scalar(0, 1, 0, 0, 0, 0, 1, 1, 1, 0, 1.0, 0);
  const TimeGrid g(1.0, 1000);
  const auto sol = solve_standard_P(p, g);
  CHECK(std::abs(sol.P.front()(0, 0) - std::tanh(1.0)) <= 1e-12);
  for (std::size_t k = 0; k < g.size(); k += 100) {
    CHECK(std::abs(sol.P[k](0, 0) - std::tanh(1.0 - g.knot(k))) <= 1e-12);
  }
}

TEST_CASE("matrix Riccati solutions: residual, symmetry, terminal values") {
  const auto p = test::planar();
  const TimeGrid g(1.0, 1000);
  for (auto kind : {RiccatiKind::IndefiniteP, RiccatiKind::Standard}) {
    const auto sol = kind == RiccatiKind::Standard ? solve_standard_P(p, g) : solve_indefinite_P(p, g);
    CHECK(central_residual(sol.P, riccati_field(p, kind)) <= 1e-9);
    for (std::size_t k = 0; k < g.size(); ++k) CHECK((sol.P[k] - sol.P[k].transpose()).norm() == 0.0);
    const Matrix want = kind == RiccatiKind::Standard ? p.H : Matrix(-p.H);
    CHECK(sol.P.back() == want);
  }
  // The standard solution is positive semidefinite.
  const auto st = solve_standard_P(p, g);
  for (std::size_t k = 0; k < g.size(); k += 50) CHECK(smallest_eigenvalue(st.P[k]) >= -1e-12);
}
