#include <doctest.h>

#include <filesystem>

#include "rmfg/config.hpp"
#include "rmfg/errors.hpp"
#include "rmfg/model.hpp"
#include "support.hpp"

using namespace rmfg;

TEST_CASE("valid data pass and derived quantities") {
  const auto p = test::ex22();
  const auto d = validate(p);
  CHECK(d.n == 1);
  CHECK(d.n1 == 1);
  CHECK(d.n2 == 1);
  CHECK(d.Qhat(0, 0) == doctest::Approx(0.04));
  CHECK(control_gain(p)(0, 0) == doctest::Approx(1.0 / 1.5));
  CHECK(rinv_bt(p)(0, 0) == doctest::Approx(1.0 / 1.5));
  CHECK_NOTHROW(validate(test::planar()));
}

TEST_CASE("all violations are reported together") {
  auto p = test::planar();
  p.R = test::s(-1.0);
  p.Q(0, 1) = 0.7;
  p.gamma = 0.0;
  p.T = -1.0;
  const auto v = violations(p);
  CHECK(v.size() >= 4);
  try {
    validate(p);
    FAIL("validate accepted invalid data");
  } catch (const InvalidModelError& e) {
    CHECK(e.violations().size() == v.size());
  }
}

TEST_CASE("shape mismatches are violations") {
  auto p = test::planar();
  p.G = Matrix::Zero(3, 3);
  p.eta = Vector::Zero(3);
  CHECK(violations(p).size() >= 2);
  auto q = test::ex22();
  q.H = test::s(-0.1);
  CHECK(!violations(q).empty());
  q = test::ex22();
  q.A(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK(!violations(q).empty());
}

TEST_CASE("initial specifications") {
  const auto p = test::ex22();
  InitSpec det;
  det.mode = InitMode::Deterministic;
  det.points = {test::sv(1.0), test::sv(2.0)};
  CHECK_NOTHROW(validate_init(det, 2, 1));
  CHECK_THROWS_AS(validate_init(det, 3, 1), InvalidModelError);
  CHECK(det.mean(1, p)(0) == 2.0);

  InitSpec rnd;
  rnd.mode = InitMode::Random;
  rnd.means = {test::sv(0.9), test::sv(1.1)};
  rnd.covariances = {test::s(0.04)};
  CHECK_NOTHROW(validate_init(rnd, 5, 1));
  CHECK(rnd.mean(2, p)(0) == 0.9);
  CHECK(rnd.mean(3, p)(0) == 1.1);
  CHECK(rnd.covariance(3, p)(0, 0) == 0.04);
  rnd.covariances = {test::s(-0.04)};
  CHECK_THROWS_AS(validate_init(rnd, 5, 1), InvalidModelError);

  InitSpec sh;
  CHECK(sh.mean(7, p) == p.m0);
  CHECK(sh.covariance(7, p)(0, 0) == 0.0);
}

TEST_CASE("config parsing promotes scalars and fills defaults") {
  const auto c = parse_config(R"({"A": 0.5, "B": 1, "Q": 1, "R": 1.5, "gamma": 1, "T": 1.3})");
  CHECK(c.params.A.rows() == 1);
  CHECK(c.params.G(0, 0) == 0.0);
  CHECK(c.params.H(0, 0) == 0.0);
  CHECK(c.params.eta.size() == 1);
  CHECK(c.init.mode == InitMode::Shared);
  CHECK(c.solver.n_steps == 2000);
}

TEST_CASE("config errors name the field") {
  try {
    parse_config(R"({"A": 0.5, "B": 1, "Q": 1, "R": 1.5, "gamma": 1})");
    FAIL("missing T accepted");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("'T'") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config(R"({"A": [[1, 2], [3]], "B": 1, "Q": 1, "R": 1, "gamma": 1, "T": 1})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config("not json"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.json"), ConfigError);
  CHECK_THROWS_AS(
      parse_config(R"({"A": 1, "B": 1, "Q": 1, "R": 1, "gamma": 1, "T": 1, "init": {"mode": "odd"}})"),
      ConfigError);
}

TEST_CASE("config round trip") {
  Config c;
  c.params = test::planar();
  c.init.mode = InitMode::Random;
  c.init.means = {Vector{{1.0, 0.5}}};
  c.init.covariances = {Matrix{{0.1, 0.02}, {0.02, 0.2}}};
  c.solver.n_steps = 321;
  c.solver.h2_basis = 12;
  const auto path = std::filesystem::temp_directory_path() / "rmfg_roundtrip.json";
  save_config(c, path);
  const auto back = load_config(path);
  std::filesystem::remove(path);
  CHECK(back.params.A == c.params.A);
  CHECK(back.params.B == c.params.B);
  CHECK(back.params.Q == c.params.Q);
  CHECK(back.params.H == c.params.H);
  CHECK(back.params.eta == c.params.eta);
  CHECK(back.params.gamma == c.params.gamma);
  CHECK(back.params.T == c.params.T);
  CHECK(back.init.mode == InitMode::Random);
  CHECK(back.init.covariances.front() == c.init.covariances.front());
  CHECK(back.solver.n_steps == 321);
  CHECK(back.solver.h2_basis == 12);
  CHECK(to_json(back) == to_json(c));
}
