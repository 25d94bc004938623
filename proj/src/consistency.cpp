#include "rmfg/consistency.hpp"

#include <algorithm>
#include <cmath>

#include "rmfg/blocks.hpp"
#include "rmfg/errors.hpp"
#include "rmfg/linear_flow.hpp"

namespace rmfg {

namespace {

Trajectory control_of(const ModelParams& p, const Trajectory& y) {
  const Matrix g = rinv_bt(p);
  return y.map([&](std::size_t, const Matrix& v) -> Matrix { return g * v; });
}

double boundary_error(const ModelParams& p, const Trajectory& m, const Trajectory& pp,
                      const Trajectory& y) {
  // Relative to the size of the solution.
  const double scale = 1.0 + std::max({m.max_norm(), pp.max_norm(), y.max_norm()});
  double e = (m.front() - p.m0).norm();
  e = std::max(e, (pp.back() - p.H * m.back()).norm());
  e = std::max(e, (y.back() + p.H * m.back()).norm());
  return e / scale;
}

}  // namespace

double consistency_residual(const ModelParams& p, const Trajectory& m, const Trajectory& pp,
                            const Trajectory& y) {
  const Trajectory w = stack({&m, &pp, &y});
  const Matrix M = consistency_matrix(p);
  const Vector c = consistency_forcing(p);
  return central_residual(w, [&](double, const Matrix& v) -> Matrix { return M * v + c; });
}

ConsistencySolution solve_bvp_shooting(const ModelParams& p, const TimeGrid& grid) {
  validate(p);
  const auto n = p.A.rows();
  LinearBvp bvp;
  bvp.M = consistency_matrix(p);
  const Vector c = consistency_forcing(p);
  bvp.forcing = [c](std::size_t) -> Vector { return c; };
  bvp.base = Vector::Zero(3 * n);
  bvp.base.head(n) = p.m0;
  bvp.U = Matrix::Zero(3 * n, 2 * n);
  bvp.U.bottomRows(2 * n) = Matrix::Identity(2 * n, 2 * n);
  bvp.C = consistency_terminal(p);
  bvp.r = Vector::Zero(2 * n);
  const auto solved = solve_linear_bvp(bvp, grid);

  ConsistencySolution s{block_rows(solved.w, 0, n), block_rows(solved.w, n, n),
                        block_rows(solved.w, 2 * n, n), Trajectory::constant(grid, Vector::Zero(p.B.cols())),
                        ConsistencyMethod::Shooting, 0.0, 0.0, 0, {}};
  s.u_bar = control_of(p, s.y);
  s.residual = consistency_residual(p, s.m, s.p, s.y);
  s.boundary_error = boundary_error(p, s.m, s.p, s.y);
  if (s.residual > 1e-6 || s.boundary_error > 1e-8) {
    throw AccuracyError("consistency shooting inaccurate: residual " + std::to_string(s.residual) +
                        ", boundary error " + std::to_string(s.boundary_error));
  }
  return s;
}

ConsistencySolution fixed_point_iterate(const ModelParams& p, const RiccatiSolution& K,
                                        const TimeGrid& grid, double tol, int max_iter) {
  validate(p);
  if (!(K.P.grid() == grid)) throw ShapeError("K is not on the given grid");
  const auto n = p.A.rows();
  const Matrix F = p.A + p.G;
  const Matrix ig = Matrix::Identity(n, n) - p.Gamma;
  const Matrix S = control_gain(p);
  const Vector phi_const = ig.transpose() * p.Q * p.eta;
  const Vector q_eta = p.Q * p.eta;
  const Matrix qig = p.Q * ig;
  const double g = p.gamma;
  const Trajectory& Kt = K.P;

  Trajectory h = Trajectory::constant(grid, Vector::Zero(n));
  ConsistencySolution s{h, h, h, h, ConsistencyMethod::FixedPoint, 0.0, 0.0, 0, {}};
  for (int it = 1; it <= max_iter; ++it) {
    const Trajectory phi = ode_rk4(
        [&](double t, const Matrix& v) -> Matrix {
          const Matrix k = Kt.sample(t);
          return -(F - g * k).transpose() * v + k * h.sample(t) + phi_const;
        },
        Vector::Zero(n), grid, Direction::Backward);
    const Trajectory m = ode_rk4(
        [&](double t, const Matrix& v) -> Matrix {
          return (F - g * Kt.sample(t)) * v + h.sample(t) + g * phi.sample(t);
        },
        p.m0, grid, Direction::Forward);
    const Trajectory y = ode_rk4(
        [&](double t, const Matrix& v) -> Matrix {
          return -p.A.transpose() * v + qig * m.sample(t) - q_eta;
        },
        Matrix(-p.H * m.back()), grid, Direction::Backward);
    const Trajectory h_new = y.map([&](std::size_t, const Matrix& v) -> Matrix { return S * v; });
    const double inc = sup_distance(h_new, h);
    s.increments.push_back(inc);
    h = h_new;
    s.m = m;
    s.y = y;
    s.p = m.map([&](std::size_t k, const Matrix& v) -> Matrix { return -Kt[k] * v + phi[k]; });
    s.iterations = it;
    if (inc <= tol) {
      s.u_bar = control_of(p, s.y);
      s.residual = consistency_residual(p, s.m, s.p, s.y);
      s.boundary_error = boundary_error(p, s.m, s.p, s.y);
      return s;
    }
  }
  throw NonConvergenceError("consistency fixed point did not converge", max_iter, s.increments.back());
}

double observed_ratio(const ConsistencySolution& s, double floor) {
  double r = 0.0;
  for (std::size_t k = 1; k < s.increments.size(); ++k) {
    if (s.increments[k - 1] > floor && s.increments[k] > floor) {
      r = std::max(r, s.increments[k] / s.increments[k - 1]);
    }
  }
  return r;
}

EquivalenceReport validate_equivalences(const ConsistencySolution& sol, const ModelParams& p,
                                        const TimeGrid& grid) {
  validate(p);
  if (!(sol.m.grid() == grid)) throw ShapeError("solution is not on the given grid");
  const auto n = p.A.rows();
  const Matrix I = Matrix::Identity(n, n);
  const Matrix F = p.A + p.G;
  const Matrix ig = I - p.Gamma;
  const Matrix S = control_gain(p);
  // Order (x, m, p, y).
  Matrix M = Matrix::Zero(4 * n, 4 * n);
  M.block(0, 0, n, n) = p.A;
  M.block(0, n, n, n) = p.G;
  M.block(0, 2 * n, n, n) = p.gamma * I;
  M.block(0, 3 * n, n, n) = S;
  M.block(n, n, n, n) = F;
  M.block(n, 2 * n, n, n) = p.gamma * I;
  M.block(n, 3 * n, n, n) = S;
  M.block(2 * n, n, n, n) = -ig.transpose() * p.Q * ig;
  M.block(2 * n, 2 * n, n, n) = -F.transpose();
  M.block(3 * n, 0, n, n) = p.Q;
  M.block(3 * n, n, n, n) = -p.Q * p.Gamma;
  M.block(3 * n, 3 * n, n, n) = -p.A.transpose();
  Vector c = Vector::Zero(4 * n);
  c.segment(2 * n, n) = ig.transpose() * p.Q * p.eta;
  c.segment(3 * n, n) = -p.Q * p.eta;

  LinearBvp bvp;
  bvp.M = M;
  bvp.forcing = [c](std::size_t) -> Vector { return c; };
  bvp.base = Vector::Zero(4 * n);
  bvp.base.head(n) = p.m0;
  bvp.base.segment(n, n) = p.m0;
  bvp.U = Matrix::Zero(4 * n, 2 * n);
  bvp.U.bottomRows(2 * n) = Matrix::Identity(2 * n, 2 * n);
  bvp.C = Matrix::Zero(2 * n, 4 * n);
  bvp.C.block(0, n, n, n) = -p.H;
  bvp.C.block(0, 2 * n, n, n) = I;
  bvp.C.block(n, 0, n, n) = p.H;
  bvp.C.block(n, 3 * n, n, n) = I;
  bvp.r = Vector::Zero(2 * n);
  const auto solved = solve_linear_bvp(bvp, grid);

  EquivalenceReport r;
  const Trajectory x = block_rows(solved.w, 0, n);
  const Trajectory m = block_rows(solved.w, n, n);
  r.x_minus_m = sup_distance(x, m);
  r.m_gap = sup_distance(m, sol.m);
  r.p_gap = sup_distance(block_rows(solved.w, 2 * n, n), sol.p);
  r.y_gap = sup_distance(block_rows(solved.w, 3 * n, n), sol.y);
  const double worst = std::max({r.x_minus_m, r.m_gap, r.p_gap, r.y_gap});
  r.scale = 1.0 + std::max({sol.m.max_norm(), sol.p.max_norm(), sol.y.max_norm()});
  r.passed = worst <= 1e-7 * r.scale;
  if (!r.passed) {
    throw EquivalenceViolation("lifted system disagrees with the consistency solution by " +
                               std::to_string(worst));
  }
  return r;
}

}  // namespace rmfg
