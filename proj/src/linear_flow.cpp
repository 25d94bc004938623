#include "rmfg/linear_flow.hpp"

#include <cmath>

#include "rmfg/errors.hpp"

namespace rmfg {

StepMaps step_maps(const Matrix& m, double dt) {
  const auto d = m.rows();
  Matrix aug = Matrix::Zero(2 * d, 2 * d);
  aug.topLeftCorner(d, d) = m;
  aug.topRightCorner(d, d) = Matrix::Identity(d, d);
  const Matrix e = mat_exp(aug, dt);
  return {e.topLeftCorner(d, d), e.topRightCorner(d, d)};
}

Trajectory propagate(const StepMaps& maps, const StepForcing& forcing, const Vector& init,
                     const TimeGrid& grid) {
  std::vector<Matrix> values;
  values.reserve(grid.size());
  Vector w = init;
  values.push_back(w);
  for (int k = 0; k < grid.n_steps(); ++k) {
    Vector next = maps.E * w;
    if (forcing) next += maps.F * forcing(static_cast<std::size_t>(k));
    w = std::move(next);
    values.push_back(w);
  }
  return Trajectory(grid, std::move(values));
}

double hadamard_ratio(const Matrix& s) {
  if (s.rows() == 0) return 1.0;
  double prod = 1.0;
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    const double r = s.row(i).norm();
    if (r == 0.0) return 0.0;
    prod *= r;
  }
  return std::abs(s.determinant()) / prod;
}

double shooting_bound(const Matrix& c_phi, const Matrix& u) {
  const auto k = u.cols();
  double bound = 1.0;
  for (Eigen::Index i = 0; i < c_phi.rows(); ++i) bound *= c_phi.row(i).norm();
  if (k > 0) {
    const Matrix gram = u.transpose() * u;
    const double unorm =
        std::sqrt(Eigen::SelfAdjointEigenSolver<Matrix>(gram, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff());
    bound *= std::pow(unorm, static_cast<double>(k));
  }
  return bound;
}

double shooting_ratio(const Matrix& c_phi, const Matrix& u) {
  const double bound = shooting_bound(c_phi, u);
  return bound > 0.0 ? std::abs((c_phi * u).determinant()) / bound : 0.0;
}

LinearBvpSolution solve_linear_bvp(const LinearBvp& bvp, const TimeGrid& grid) {
  const auto d = bvp.M.rows();
  require_shape(bvp.M, d, d, "bvp matrix");
  require_shape(bvp.base, d, 1, "bvp initial base");
  const auto k = bvp.U.cols();
  require_shape(bvp.U, d, k, "bvp unknown directions");
  require_shape(bvp.C, k, d, "bvp terminal constraint");
  require_shape(bvp.r, k, 1, "bvp terminal value");

  const StepMaps maps = step_maps(bvp.M, grid.dt());
  const Vector particular_T = propagate(maps, bvp.forcing, bvp.base, grid).back();
  Matrix flow = Matrix::Identity(d, d);
  for (int s = 0; s < grid.n_steps(); ++s) flow = maps.E * flow;

  const Matrix CPhi = bvp.C * flow;
  const Matrix shoot = CPhi * bvp.U;
  const double ratio = shooting_ratio(CPhi, bvp.U);
  if (!(ratio > 1e-10)) {
    throw BvpUnsolvableError("shooting matrix is singular (normalized det " +
                             std::to_string(ratio) + ")");
  }
  const Vector rhs = bvp.r - bvp.C * particular_T;
  const Vector mu = shoot.fullPivLu().solve(rhs);
  const Vector init = bvp.base + bvp.U * mu;
  return {propagate(maps, bvp.forcing, init, grid), mu, ratio};
}

Trajectory block_rows(const Trajectory& w, Eigen::Index offset, Eigen::Index len) {
  return w.map([&](std::size_t, const Matrix& v) -> Matrix { return v.middleRows(offset, len); });
}

Trajectory stack(const std::vector<const Trajectory*>& parts) {
  if (parts.empty()) throw ShapeError("stack of no trajectories");
  const auto& grid = parts.front()->grid();
  Eigen::Index rows = 0;
  for (const auto* p : parts) {
    if (!(p->grid() == grid)) throw ShapeError("stack: grids differ");
    rows += p->rows();
  }
  std::vector<Matrix> values(grid.size(), Matrix(rows, 1));
  for (std::size_t k = 0; k < grid.size(); ++k) {
    Eigen::Index off = 0;
    for (const auto* p : parts) {
      values[k].middleRows(off, p->rows()) = (*p)[k];
      off += p->rows();
    }
  }
  return Trajectory(grid, std::move(values));
}

}  // namespace rmfg
