#include "rmfg/strategy.hpp"

#include <cmath>

#include "rmfg/blocks.hpp"
#include "rmfg/errors.hpp"
#include "rmfg/linear_flow.hpp"

namespace rmfg {

AgentLimitSystem solve_agent_limit(const ModelParams& p, const ConsistencySolution& cs,
                                   const Vector& x0_mean, const TimeGrid& grid) {
  validate(p);
  const auto n = p.A.rows();
  require_shape(x0_mean, n, 1, "x0_mean");
  if (!(cs.m.grid() == grid)) throw ShapeError("consistency solution is not on the given grid");
  const Matrix I = Matrix::Identity(n, n);
  const Matrix F = p.A + p.G;
  const Matrix ig = I - p.Gamma;
  const Matrix S = control_gain(p);
  const Matrix Q = p.Q;

  // Order (x, m, p, y, mc, pc, yc).
  const Eigen::Index d = 7 * n;
  Matrix M = Matrix::Zero(d, d);
  M.block(0, 0, n, n) = p.A;
  M.block(0, n, n, n) = p.G;
  M.block(0, 2 * n, n, n) = p.gamma * I;
  M.block(0, 3 * n, n, n) = S;
  M.block(n, n, n, n) = F;
  M.block(n, 2 * n, n, n) = p.gamma * I;
  M.block(n, 6 * n, n, n) = S;
  M.block(2 * n, 0, n, n) = -ig.transpose() * Q;
  M.block(2 * n, n, n, n) = ig.transpose() * Q * p.Gamma;
  M.block(2 * n, 2 * n, n, n) = -F.transpose();
  M.block(3 * n, 0, n, n) = Q;
  M.block(3 * n, n, n, n) = -Q * p.Gamma;
  M.block(3 * n, 3 * n, n, n) = -p.A.transpose();
  M.block(4 * n, 4 * n, 3 * n, 3 * n) = consistency_matrix(p);
  Vector c = Vector::Zero(d);
  c.segment(2 * n, n) = ig.transpose() * Q * p.eta;
  c.segment(3 * n, n) = -Q * p.eta;
  c.segment(4 * n, 3 * n) = consistency_forcing(p);

  LinearBvp bvp;
  bvp.M = M;
  bvp.forcing = [c](std::size_t) -> Vector { return c; };
  bvp.base = Vector::Zero(d);
  bvp.base.segment(0, n) = x0_mean;
  bvp.base.segment(n, n) = p.m0;
  bvp.base.segment(4 * n, n) = cs.m.front();
  bvp.base.segment(5 * n, n) = cs.p.front();
  bvp.base.segment(6 * n, n) = cs.y.front();
  bvp.U = Matrix::Zero(d, 2 * n);
  bvp.U.block(2 * n, 0, 2 * n, 2 * n) = Matrix::Identity(2 * n, 2 * n);
  bvp.C = Matrix::Zero(2 * n, d);
  bvp.C.block(0, 0, n, n) = -p.H;
  bvp.C.block(0, 2 * n, n, n) = I;
  bvp.C.block(n, 0, n, n) = p.H;
  bvp.C.block(n, 3 * n, n, n) = I;
  bvp.r = Vector::Zero(2 * n);
  const auto solved = solve_linear_bvp(bvp, grid);

  AgentLimitSystem als{block_rows(solved.w, 0, n), block_rows(solved.w, n, n),
                       block_rows(solved.w, 2 * n, n), block_rows(solved.w, 3 * n, n),
                       cs.u_bar};
  return als;
}

Vector FeedbackStrategy::control(const ModelParams& p, std::size_t k, const Vector& x) const {
  return rinv_bt(p) * (-P.P[k] * x + phi[k]);
}

double reconstruction_error(const FeedbackStrategy& fs) {
  double e = 0.0;
  for (std::size_t k = 0; k < fs.phi.size(); ++k) {
    e = std::max(e, (-fs.P.P[k] * fs.limit.x_bar[k] + fs.phi[k] - fs.limit.y_bar[k]).norm());
  }
  return e;
}

FeedbackStrategy build_feedback(const ModelParams& p, const AgentLimitSystem& als,
                                const TimeGrid& grid) {
  return build_feedback(p, als, solve_standard_P(p, grid), grid);
}

FeedbackStrategy build_feedback(const ModelParams& p, const AgentLimitSystem& als,
                                const RiccatiSolution& P, const TimeGrid& grid) {
  validate(p);
  if (!(P.P.grid() == grid) || !(als.x_bar.grid() == grid)) throw ShapeError("grid mismatch in build_feedback");
  const auto n = p.A.rows();
  const Matrix S = control_gain(p);
  const double g = p.gamma;
  const Trajectory phi = ode_rk4(
      [&](double t, const Matrix& v) -> Matrix {
        const Matrix Pt = P.P.sample(t);
        const Vector mb = als.m_bar.sample(t);
        const Vector pb = als.p_bar.sample(t);
        return -(p.A - S * Pt).transpose() * v + Pt * (p.G * mb + g * pb) - p.Q * (p.Gamma * mb + p.eta);
      },
      Vector::Zero(n), grid, Direction::Backward);
  FeedbackStrategy fs{P, phi, als.u_bar_star,
                      als.p_bar.map([&](std::size_t, const Matrix& v) -> Matrix { return g * v; }), als};
  const double err = reconstruction_error(fs);
  const double scale = 1.0 + als.y_bar.max_norm();
  if (err > 1e-5 * scale) {
    throw AccuracyError("decoupling identity -P xbar + phi = ybar violated by " + std::to_string(err));
  }
  return fs;
}

LimitCost limit_cost(const ModelParams& p, const AgentLimitSystem& als, const FeedbackStrategy& fs,
                     const TimeGrid& grid, bool noise_variance_term,
                     const std::optional<Trajectory>& f, const std::optional<Matrix>& sigma0) {
  validate(p);
  if (!(als.x_bar.grid() == grid) || !(fs.phi.grid() == grid)) throw ShapeError("limit_cost: grid mismatch");
  if (f && !(f->grid() == grid)) throw ShapeError("limit_cost: disturbance grid mismatch");
  const auto n = p.A.rows();
  const Matrix F = p.A + p.G;
  const Matrix G_rbt = rinv_bt(p);
  const Matrix S = control_gain(p);

  Trajectory fhat = fs.f_hat;
  Trajectory z = Trajectory::constant(grid, Vector::Zero(n));
  if (f) {
    z = ode_rk4([&](double t, const Matrix& v) -> Matrix { return F * v + f->sample(t) - fhat.sample(t); },
                Vector::Zero(n), grid, Direction::Forward);
  }
  const Trajectory& fused = f ? *f : fhat;

  std::vector<double> mean_integrand(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Vector x = als.x_bar[k] + z[k];
    const Vector m = als.m_bar[k] + z[k];
    const Vector e = x - p.Gamma * m - p.eta;
    const Vector u = G_rbt * als.y_bar[k];
    const Vector fk = fused[k];
    mean_integrand[k] = e.dot(p.Q * e) + u.dot(p.R * u) - fk.squaredNorm() / p.gamma;
  }
  LimitCost c;
  const Vector xT = als.x_bar.back() + z.back();
  c.mean_part = trapezoid(mean_integrand, grid.dt()) + xT.dot(p.H * xT);

  if (noise_variance_term) {
    const Matrix DD = p.D * p.D.transpose();
    Rk4Options opts;
    opts.project = [](Matrix& m) { m = 0.5 * (m + m.transpose()).eval(); };
    const Matrix s0 = sigma0 ? *sigma0 : Matrix::Zero(n, n);
    const Trajectory sigma = ode_rk4(
        [&](double t, const Matrix& s) -> Matrix {
          const Matrix Acl = p.A - S * fs.P.P.sample(t);
          return Acl * s + s * Acl.transpose() + DD;
        },
        s0, grid, Direction::Forward, opts);
    std::vector<double> integrand(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const Matrix& Pk = fs.P.P[k];
      integrand[k] = (p.Q * sigma[k]).trace() + (Pk * S * Pk * sigma[k]).trace();
    }
    c.fluctuation_part = trapezoid(integrand, grid.dt()) + (p.H * sigma.back()).trace();
  }
  c.total = c.mean_part + c.fluctuation_part;
  return c;
}

namespace {

Trajectory lin(const Trajectory& base, const Trajectory& delta, double w) {
  return base.map([&](std::size_t k, const Matrix& v) -> Matrix { return v + w * delta[k]; });
}

Trajectory diff(const Trajectory& a, const Trajectory& b) {
  return a.map([&](std::size_t k, const Matrix& v) -> Matrix { return v - b[k]; });
}

}  // namespace

StrategyField::StrategyField(const ModelParams& p, const ConsistencySolution& cs, const TimeGrid& grid)
    : params_(p), cs_(cs), grid_(grid),
      base_(build_feedback(p, solve_agent_limit(p, cs, p.m0, grid), grid)) {
  const auto n = p.A.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    Vector x0 = p.m0;
    x0(i) += 1.0;
    const auto als = solve_agent_limit(p, cs, x0, grid);
    FeedbackStrategy fs = build_feedback(p, als, base_.P, grid);
    fs.phi = diff(fs.phi, base_.phi);
    fs.f_hat = diff(fs.f_hat, base_.f_hat);
    fs.limit.x_bar = diff(fs.limit.x_bar, base_.limit.x_bar);
    fs.limit.m_bar = diff(fs.limit.m_bar, base_.limit.m_bar);
    fs.limit.p_bar = diff(fs.limit.p_bar, base_.limit.p_bar);
    fs.limit.y_bar = diff(fs.limit.y_bar, base_.limit.y_bar);
    unit_.push_back(std::move(fs));
  }
}

FeedbackStrategy StrategyField::at(const Vector& x0_mean) const {
  require_shape(x0_mean, params_.A.rows(), 1, "initial mean");
  FeedbackStrategy fs = base_;
  const Vector delta = x0_mean - params_.m0;
  for (Eigen::Index i = 0; i < delta.size(); ++i) {
    const double w = delta(i);
    if (w == 0.0) continue;
    const auto& u = unit_[static_cast<std::size_t>(i)];
    fs.phi = lin(fs.phi, u.phi, w);
    fs.f_hat = lin(fs.f_hat, u.f_hat, w);
    fs.limit.x_bar = lin(fs.limit.x_bar, u.limit.x_bar, w);
    fs.limit.m_bar = lin(fs.limit.m_bar, u.limit.m_bar, w);
    fs.limit.p_bar = lin(fs.limit.p_bar, u.limit.p_bar, w);
    fs.limit.y_bar = lin(fs.limit.y_bar, u.limit.y_bar, w);
  }
  return fs;
}

StrategyField synthesize(const ModelParams& p, const TimeGrid& grid) {
  return StrategyField(p, solve_bvp_shooting(p, grid), grid);
}

}  // namespace rmfg
