#pragma once

// Dense linear algebra and ODE/SDE kernels shared by every solver module.

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <string_view>
#include <vector>

namespace rmfg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Throws NonFiniteError naming `what` if any entry is NaN or infinite.
void require_finite(const Matrix& m, std::string_view what);

/// Throws ShapeError unless `m` is rows x cols.
void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, std::string_view what);

/// Uniform discretization of [t0, t1] with knots t_k = t0 + k (t1 - t0) / n_steps.
class TimeGrid {
 public:
  TimeGrid(double t0, double t1, int n_steps);
  TimeGrid(double horizon, int n_steps) : TimeGrid(0.0, horizon, n_steps) {}

  double t0() const { return t0_; }
  double t1() const { return t1_; }
  int n_steps() const { return n_steps_; }
  std::size_t size() const { return static_cast<std::size_t>(n_steps_) + 1; }
  double dt() const { return (t1_ - t0_) / n_steps_; }
  double knot(std::size_t k) const;
  double horizon() const { return t1_ - t0_; }

  bool operator==(const TimeGrid& other) const = default;

 private:
  double t0_;
  double t1_;
  int n_steps_;
};

/// One matrix (or column vector) per grid knot.
class Trajectory {
 public:
  Trajectory(TimeGrid grid, std::vector<Matrix> values);
  /// Constant trajectory.
  static Trajectory constant(const TimeGrid& grid, const Matrix& value);

  const TimeGrid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  const Matrix& operator[](std::size_t k) const { return values_[k]; }
  const Matrix& front() const { return values_.front(); }
  const Matrix& back() const { return values_.back(); }
  const std::vector<Matrix>& values() const { return values_; }
  Eigen::Index rows() const { return values_.front().rows(); }
  Eigen::Index cols() const { return values_.front().cols(); }

  /// Value at an arbitrary time via local cubic Lagrange interpolation (fourth order).
  Matrix sample(double t) const;

  /// max_k |value_k| in the Frobenius norm.
  double max_norm() const;

  /// Knot-wise linear map.
  Trajectory map(const std::function<Matrix(std::size_t, const Matrix&)>& fn) const;

 private:
  TimeGrid grid_;
  std::vector<Matrix> values_;
};

/// sup over knots of |a_k - b_k|; grids must match.
double sup_distance(const Trajectory& a, const Trajectory& b);

/// e^{M t} by scaling and squaring with diagonal Pade approximants up to degree 13.
Matrix mat_exp(const Matrix& m, double t = 1.0);

enum class Direction { Forward, Backward };

using OdeField = std::function<Matrix(double, const Matrix&)>;

struct Rk4Options {
  double escape_norm = 1e8;
  /// Applied to the state after every step (e.g. symmetrization).
  std::function<void(Matrix&)> project;
};

/// Classical RK4 on the grid. Backward integration starts from `init` at t1.
/// Values are always stored in increasing time order.
Trajectory ode_rk4(const OdeField& field, const Matrix& init, const TimeGrid& grid,
                   Direction direction, const Rk4Options& options = {});

/// Brownian increments, one column of n2 entries per grid step.
struct WhiteNoisePath {
  Matrix increments;  // n2 x n_steps
};

/// x_{k+1} = x_k + drift(t_k, x_k) dt + D dW_k.
Trajectory euler_maruyama(const OdeField& drift, const Matrix& diffusion,
                          const WhiteNoisePath& noise, const Vector& init, const TimeGrid& grid);

/// Smallest eigenvalue of a symmetric matrix. Asymmetry beyond 1e-8 |S| is an error.
double smallest_eigenvalue(const Matrix& s);

/// Frobenius norm.
inline double fro(const Matrix& m) { return m.norm(); }

/// Relative ODE residual max_k |D w_k - field(t_k, w_k)| / (1 + max|w|) over interior knots,
/// using the fourth-order central difference stencil.
double central_residual(const Trajectory& traj, const OdeField& field);

/// Trapezoid rule for a scalar sampled on the grid.
double trapezoid(const std::vector<double>& samples, double dt);

}  // namespace rmfg
