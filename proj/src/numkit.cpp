#include "rmfg/numkit.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "rmfg/errors.hpp"

namespace rmfg {

void require_finite(const Matrix& m, std::string_view what) {
  if (!m.allFinite()) throw NonFiniteError(std::string(what) + " has non-finite entries");
}

void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, std::string_view what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(rows) + "x" +
                     std::to_string(cols) + ", got " + std::to_string(m.rows()) + "x" +
                     std::to_string(m.cols()));
  }
}

TimeGrid::TimeGrid(double t0, double t1, int n_steps) : t0_(t0), t1_(t1), n_steps_(n_steps) {
  if (!std::isfinite(t0) || !std::isfinite(t1) || !(t1 > t0)) {
    throw Error("time grid needs finite t0 < t1");
  }
  if (n_steps < 2) throw Error("time grid needs at least 2 steps");
}

double TimeGrid::knot(std::size_t k) const {
  if (k == static_cast<std::size_t>(n_steps_)) return t1_;
  return t0_ + static_cast<double>(k) * dt();
}

Trajectory::Trajectory(TimeGrid grid, std::vector<Matrix> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    throw ShapeError("trajectory has " + std::to_string(values_.size()) + " values for " +
                     std::to_string(grid_.size()) + " knots");
  }
  const auto r = values_.front().rows();
  const auto c = values_.front().cols();
  for (const auto& v : values_) {
    require_shape(v, r, c, "trajectory value");
    require_finite(v, "trajectory value");
  }
}

Trajectory Trajectory::constant(const TimeGrid& grid, const Matrix& value) {
  return Trajectory(grid, std::vector<Matrix>(grid.size(), value));
}

Matrix Trajectory::sample(double t) const {
  const double h = grid_.dt();
  const auto last = static_cast<std::ptrdiff_t>(values_.size()) - 1;
  double s = (t - grid_.t0()) / h;
  if (s <= 0.0) return values_.front();
  if (s >= static_cast<double>(last)) return values_.back();
  auto k = static_cast<std::ptrdiff_t>(std::floor(s));
  const double frac = s - static_cast<double>(k);
  if (frac == 0.0) return values_[static_cast<std::size_t>(k)];
  // Four-point stencil k-1..k+2, shifted inward at the ends.
  std::ptrdiff_t base = std::clamp<std::ptrdiff_t>(k - 1, 0, last - 3);
  const double x = s - static_cast<double>(base);
  std::array<double, 4> w{};
  for (int i = 0; i < 4; ++i) {
    double num = 1.0, den = 1.0;
    for (int j = 0; j < 4; ++j) {
      if (j == i) continue;
      num *= (x - j);
      den *= (i - j);
    }
    w[static_cast<std::size_t>(i)] = num / den;
  }
  Matrix out = w[0] * values_[static_cast<std::size_t>(base)];
  for (int i = 1; i < 4; ++i) out += w[static_cast<std::size_t>(i)] * values_[static_cast<std::size_t>(base + i)];
  return out;
}

double Trajectory::max_norm() const {
  double m = 0.0;
  for (const auto& v : values_) m = std::max(m, v.norm());
  return m;
}

Trajectory Trajectory::map(const std::function<Matrix(std::size_t, const Matrix&)>& fn) const {
  std::vector<Matrix> out;
  out.reserve(values_.size());
  for (std::size_t k = 0; k < values_.size(); ++k) out.push_back(fn(k, values_[k]));
  return Trajectory(grid_, std::move(out));
}

double sup_distance(const Trajectory& a, const Trajectory& b) {
  if (!(a.grid() == b.grid())) throw ShapeError("trajectories live on different grids");
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, (a[k] - b[k]).norm());
  return d;
}

namespace {

// Pade numerator coefficients b_0..b_m for m in {3,5,7,9,13}.
constexpr std::array<double, 4> kPade3{120., 60., 12., 1.};
constexpr std::array<double, 6> kPade5{30240., 15120., 3360., 420., 30., 1.};
constexpr std::array<double, 8> kPade7{17297280., 8648640., 1995840., 277200., 25200., 1512., 56., 1.};
constexpr std::array<double, 10> kPade9{17643225600., 8821612800., 2075673600., 302702400., 30270240.,
                                        2162160.,     110880.,     3960.,       90.,       1.};
constexpr std::array<double, 14> kPade13{64764752532480000., 32382376266240000., 7771770303897600.,
                                         1187353796428800.,  129060195264000.,   10559470521600.,
                                         670442572800.,      33522128640.,       1323241920.,
                                         40840800.,          960960.,            16380.,
                                         182.,               1.};

// 1-norm bounds below which the degree-m approximant is accurate to unit roundoff.
constexpr double kTheta3 = 1.495585217958292e-2;
constexpr double kTheta5 = 2.539398330063230e-1;
constexpr double kTheta7 = 9.504178996162932e-1;
constexpr double kTheta9 = 2.097847961257068e0;
constexpr double kTheta13 = 5.371920351148152e0;

template <std::size_t N>
void pade_low(const Matrix& a, const std::array<double, N>& b, Matrix& u, Matrix& v) {
  const auto n = a.rows();
  const Matrix ident = Matrix::Identity(n, n);
  const Matrix a2 = a * a;
  Matrix power = ident;
  Matrix uacc = b[1] * ident;
  v = b[0] * ident;
  for (std::size_t j = 2; j + 1 < N + 1; j += 2) {
    power = power * a2;
    v += b[j] * power;
    if (j + 1 < N) uacc += b[j + 1] * power;
  }
  u = a * uacc;
}

void pade13(const Matrix& a, Matrix& u, Matrix& v) {
  const auto& b = kPade13;
  const auto n = a.rows();
  const Matrix ident = Matrix::Identity(n, n);
  const Matrix a2 = a * a;
  const Matrix a4 = a2 * a2;
  const Matrix a6 = a4 * a2;
  Matrix tmp = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2);
  tmp += b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident;
  u = a * tmp;
  v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2);
  v += b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident;
}

}  // namespace

Matrix mat_exp(const Matrix& m, double t) {
  if (m.rows() != m.cols()) throw ShapeError("mat_exp needs a square matrix");
  if (!std::isfinite(t)) throw NonFiniteError("mat_exp time is not finite");
  require_finite(m, "mat_exp input");
  const auto n = m.rows();
  if (n == 0) return m;
  Matrix a = m * t;
  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  Matrix u, v;
  int squarings = 0;
  if (norm1 <= kTheta3) {
    pade_low(a, kPade3, u, v);
  } else if (norm1 <= kTheta5) {
    pade_low(a, kPade5, u, v);
  } else if (norm1 <= kTheta7) {
    pade_low(a, kPade7, u, v);
  } else if (norm1 <= kTheta9) {
    pade_low(a, kPade9, u, v);
  } else {
    if (norm1 > kTheta13) {
      squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm1 / kTheta13))));
      a /= std::ldexp(1.0, squarings);
    }
    pade13(a, u, v);
  }
  Matrix result = (v - u).partialPivLu().solve(v + u);
  for (int i = 0; i < squarings; ++i) {
    result = result * result;
    if (!result.allFinite() || result.cwiseAbs().maxCoeff() > 1e300) {
      throw OverflowError("mat_exp overflow during squaring");
    }
  }
  if (!result.allFinite() || result.cwiseAbs().maxCoeff() > 1e300) {
    throw OverflowError("mat_exp result overflows");
  }
  return result;
}

Trajectory ode_rk4(const OdeField& field, const Matrix& init, const TimeGrid& grid,
                   Direction direction, const Rk4Options& options) {
  require_finite(init, "ode_rk4 initial value");
  const std::size_t n = grid.size();
  std::vector<Matrix> values(n);
  const bool forward = direction == Direction::Forward;
  const double h = forward ? grid.dt() : -grid.dt();
  std::size_t k = forward ? 0 : n - 1;
  Matrix state = init;
  if (options.project) options.project(state);
  values[k] = state;

  auto check = [&](const Matrix& s, std::size_t knot) {
    const double nrm = s.norm();
    if (!std::isfinite(nrm) || nrm > options.escape_norm) {
      throw EscapeTimeError(knot, grid.knot(knot), nrm);
    }
  };
  check(state, k);
  {
    const Matrix f0 = field(grid.knot(k), state);
    require_finite(f0, "ode_rk4 field at initial value");
  }

  for (int step = 0; step < grid.n_steps(); ++step) {
    const double t = grid.knot(k);
    const std::size_t next = forward ? k + 1 : k - 1;
    const Matrix k1 = field(t, state);
    const Matrix s2 = state + 0.5 * h * k1;
    check(s2, next);
    const Matrix k2 = field(t + 0.5 * h, s2);
    const Matrix s3 = state + 0.5 * h * k2;
    check(s3, next);
    const Matrix k3 = field(t + 0.5 * h, s3);
    const Matrix s4 = state + h * k3;
    check(s4, next);
    const Matrix k4 = field(grid.knot(next), s4);
    state += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (options.project) options.project(state);
    check(state, next);
    k = next;
    values[k] = state;
  }
  return Trajectory(grid, std::move(values));
}

Trajectory euler_maruyama(const OdeField& drift, const Matrix& diffusion,
                          const WhiteNoisePath& noise, const Vector& init, const TimeGrid& grid) {
  const auto n = init.size();
  if (diffusion.rows() != n) throw ShapeError("diffusion rows must match state dimension");
  require_shape(noise.increments, diffusion.cols(), grid.n_steps(), "noise increments");
  require_finite(init, "euler_maruyama initial value");
  std::vector<Matrix> values;
  values.reserve(grid.size());
  Matrix x = init;
  values.push_back(x);
  const double dt = grid.dt();
  for (int k = 0; k < grid.n_steps(); ++k) {
    const Matrix f = drift(grid.knot(static_cast<std::size_t>(k)), x);
    if (f.rows() != n || f.cols() != 1) throw ShapeError("drift returned wrong shape");
    x += f * dt + diffusion * noise.increments.col(k);
    values.push_back(x);
  }
  return Trajectory(grid, std::move(values));
}

double smallest_eigenvalue(const Matrix& s) {
  if (s.rows() != s.cols()) throw ShapeError("smallest_eigenvalue needs a square matrix");
  require_finite(s, "smallest_eigenvalue input");
  if (s.rows() == 0) throw ShapeError("smallest_eigenvalue of an empty matrix");
  const double scale = s.norm();
  if ((s - s.transpose()).norm() > 1e-8 * std::max(scale, 1e-300) && scale > 0.0) {
    throw Error("smallest_eigenvalue: matrix is not symmetric");
  }
  const Matrix sym = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw Error("symmetric eigensolver failed");
  return solver.eigenvalues()(0);
}

double central_residual(const Trajectory& traj, const OdeField& field) {
  const auto& grid = traj.grid();
  const double h = grid.dt();
  const double scale = 1.0 + traj.max_norm();
  double worst = 0.0;
  if (traj.size() < 5) throw Error("central_residual needs at least 5 knots");
  for (std::size_t k = 2; k + 2 < traj.size(); ++k) {
    const Matrix d = (-traj[k + 2] + 8.0 * traj[k + 1] - 8.0 * traj[k - 1] + traj[k - 2]) / (12.0 * h);
    worst = std::max(worst, (d - field(grid.knot(k), traj[k])).norm());
  }
  return worst / scale;
}

double trapezoid(const std::vector<double>& samples, double dt) {
  if (samples.size() < 2) return 0.0;
  double s = 0.5 * (samples.front() + samples.back());
  for (std::size_t k = 1; k + 1 < samples.size(); ++k) s += samples[k];
  return s * dt;
}

}  // namespace rmfg
