#include "rmfg/worst_case.hpp"

#include <cmath>
#include <limits>

#include "rmfg/errors.hpp"
#include "rmfg/linear_flow.hpp"

namespace rmfg {

WorstCaseKernel::WorstCaseKernel(const ModelParams& p, const TimeGrid& grid)
    : grid_(grid), n_(p.A.rows()), min_eig_(std::numeric_limits<double>::quiet_NaN()) {
  validate(p);
  const int K = grid.n_steps();
  const double dt = grid.dt();
  const auto n = n_;
  const Eigen::Index dim = K * n;
  const auto maps = step_maps(p.A + p.G, dt);
  E_ = maps.E;
  F_ = maps.F;

  // Column block i holds the response of z(T) to a unit step value on step i: E^{K-1-i} F.
  Matrix resp(n, dim);
  Matrix h = F_;
  for (int i = K - 1; i >= 0; --i) {
    resp.middleCols(i * n, n) = h;
    h = E_ * h;
  }
  const Matrix T = resp.transpose() * qhat(p) * resp;
  const Matrix HT = resp.transpose() * p.H * resp;

  // S(i, j) = sum over knots k > max(i, j) of responses, accumulated along diagonals.
  Matrix S(dim, dim);
  for (Eigen::Index a = dim - 1; a >= 0; --a) {
    for (Eigen::Index b = dim - 1; b >= 0; --b) {
      double v = T(a, b);
      if (a + n < dim && b + n < dim) v += S(a + n, b + n);
      S(a, b) = v;
    }
  }
  Matrix M = dt * S - 0.5 * dt * T + HT;
  hessian_ = 2.0 * (M - (dt / p.gamma) * Matrix::Identity(dim, dim));
  hessian_ = 0.5 * (hessian_ + hessian_.transpose()).eval();
  llt_.compute(-hessian_);
  concave_ = llt_.info() == Eigen::Success;
  if (!concave_) min_eig_ = smallest_eigenvalue(-hessian_);
}

Vector WorstCaseKernel::linear_term(const ModelParams& p, const std::vector<Vector>& e0,
                                    const Vector& xT) const {
  const int K = grid_.n_steps();
  const double dt = grid_.dt();
  const auto n = n_;
  if (e0.size() != grid_.size()) throw ShapeError("linear_term: one tracking error per knot required");
  const Matrix gq = (Matrix::Identity(n, n) - p.Gamma).transpose() * p.Q;
  auto r = [&](int k) -> Vector {
    const double w = (k == K) ? 0.5 * dt : dt;
    Vector v = 2.0 * w * gq * e0[static_cast<std::size_t>(k)];
    if (k == K) v += 2.0 * p.H * xT;
    return v;
  };
  Vector b(K * n);
  Vector a = r(K);
  for (int i = K - 1; i >= 0; --i) {
    if (i < K - 1) a = r(i + 1) + E_.transpose() * a;
    b.segment(i * n, n) = F_.transpose() * a;
  }
  return b;
}

Vector WorstCaseKernel::maximize(const Vector& b) const {
  if (!concave_) throw Error("worst-case functional is not concave");
  return llt_.solve(b);
}

double worst_case_gradient(const WorstCaseKernel& kernel, const Vector& b, const Vector& f) {
  return (b + kernel.hessian() * f).norm();
}

AgentMoments agent_moments(const ModelParams& p, const StrategyField& field, const InitSpec& init,
                           std::size_t N, const TimeGrid& grid, std::size_t agent,
                           const std::optional<AffineLaw>& law) {
  validate(p);
  if (N == 0 || agent >= N) throw Error("agent index out of range");
  validate_init(init, N, p.A.rows());
  const auto n = p.A.rows();
  const auto n1 = p.B.cols();
  const bool others = N > 1;
  const Eigen::Index d = others ? 4 * n : 2 * n;
  const double a = 1.0 / static_cast<double>(N);
  const double bw = 1.0 - a;
  const Matrix I = Matrix::Identity(n, n);

  const Vector mu_a = init.mean(agent, p);
  const FeedbackStrategy fs_a = field.at(mu_a);
  const AffineLaw law_a = law ? *law : equilibrium_law(p, fs_a);

  Vector mu_o = Vector::Zero(n);
  Matrix cov_o = Matrix::Zero(n, n);
  if (others) {
    for (std::size_t j = 0; j < N; ++j) {
      if (j == agent) continue;
      mu_o += init.mean(j, p);
      cov_o += init.covariance(j, p);
    }
    mu_o /= static_cast<double>(N - 1);
    cov_o /= std::pow(static_cast<double>(N - 1), 2);
  }
  const FeedbackStrategy fs_o = field.at(others ? mu_o : mu_a);
  const AffineLaw law_o = equilibrium_law(p, fs_o);

  auto drift_matrix = [&](double t) -> Matrix {
    Matrix F = Matrix::Zero(d, d);
    const Matrix L1 = law_a.L.sample(t);
    F.block(0, 0, n, n) = p.A + a * p.G;
    F.block(0, n, n, n) = p.B * L1;
    F.block(n, n, n, n) = p.A + p.B * L1;
    if (others) {
      const Matrix Lo = law_o.L.sample(t);
      F.block(0, 2 * n, n, n) = bw * p.G;
      F.block(2 * n, 0, n, n) = a * p.G;
      F.block(2 * n, 2 * n, n, n) = p.A + bw * p.G;
      F.block(2 * n, 3 * n, n, n) = p.B * Lo;
      F.block(3 * n, 3 * n, n, n) = p.A + p.B * Lo;
    }
    return F;
  };
  auto drift_const = [&](double t) -> Vector {
    Vector c(d);
    const Vector l1 = law_a.l.sample(t);
    c.segment(0, n) = p.B * l1;
    c.segment(n, n) = p.B * l1 + p.G * fs_a.limit.m_bar.sample(t) + p.gamma * fs_a.limit.p_bar.sample(t);
    if (others) {
      const Vector lo = law_o.l.sample(t);
      c.segment(2 * n, n) = p.B * lo;
      c.segment(3 * n, n) = p.B * lo + p.G * fs_o.limit.m_bar.sample(t) + p.gamma * fs_o.limit.p_bar.sample(t);
    }
    return c;
  };
  const Matrix DD = p.D * p.D.transpose();
  Matrix noise = Matrix::Zero(d, d);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) noise.block(r * n, c * n, n, n) = DD;
  if (others) {
    for (int r = 2; r < 4; ++r)
      for (int c = 2; c < 4; ++c) noise.block(r * n, c * n, n, n) = DD / static_cast<double>(N - 1);
  }

  Vector s0(d);
  s0.segment(0, n) = mu_a;
  s0.segment(n, n) = mu_a;
  Matrix c0 = Matrix::Zero(d, d);
  const Matrix cov_a = init.covariance(agent, p);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) c0.block(r * n, c * n, n, n) = cov_a;
  if (others) {
    s0.segment(2 * n, n) = mu_o;
    s0.segment(3 * n, n) = mu_o;
    for (int r = 2; r < 4; ++r)
      for (int c = 2; c < 4; ++c) c0.block(r * n, c * n, n, n) = cov_o;
  }

  const Trajectory mean = ode_rk4(
      [&](double t, const Matrix& s) -> Matrix { return drift_matrix(t) * s + drift_const(t); }, s0, grid,
      Direction::Forward);
  Rk4Options opts;
  opts.project = [](Matrix& m) { m = 0.5 * (m + m.transpose()).eval(); };
  const Trajectory cov = ode_rk4(
      [&](double t, const Matrix& s) -> Matrix {
        const Matrix F = drift_matrix(t);
        return F * s + s * F.transpose() + noise;
      },
      c0, grid, Direction::Forward, opts);

  Matrix Ce = Matrix::Zero(n, d);
  Ce.block(0, 0, n, n) = I - a * p.Gamma;
  if (others) Ce.block(0, 2 * n, n, n) = -bw * p.Gamma;
  else Ce.block(0, 0, n, n) = I - p.Gamma;

  AgentMoments mo;
  const std::size_t knots = grid.size();
  std::vector<double> integrand(knots);
  for (std::size_t k = 0; k < knots; ++k) {
    Matrix Cu = Matrix::Zero(n1, d);
    Cu.block(0, n, n1, n) = law_a.L[k];
    const Vector e = Ce * mean[k] - p.eta;
    const Vector u = Cu * mean[k] + law_a.l[k];
    mo.e_mean.push_back(e);
    mo.u_mean.push_back(u);
    mo.e_var.push_back((p.Q * Ce * cov[k] * Ce.transpose()).trace());
    mo.u_var.push_back((p.R * Cu * cov[k] * Cu.transpose()).trace());
    integrand[k] = e.dot(p.Q * e) + mo.e_var.back() + u.dot(p.R * u) + mo.u_var.back();
  }
  mo.xT_mean = mean.back().topRows(n);
  mo.xT_var = (p.H * cov.back().topLeftCorner(n, n)).trace();
  mo.J0 = trapezoid(integrand, grid.dt()) + mo.xT_mean.dot(p.H * mo.xT_mean) + mo.xT_var;
  return mo;
}

WorstCaseResult worst_case_f(const ModelParams& p, const StrategyField& field, const InitSpec& init,
                             std::size_t N, const TimeGrid& grid, std::size_t agent,
                             int replications, std::uint64_t seed,
                             const std::optional<AffineLaw>& law, const WorstCaseKernel* kernel) {
  std::optional<WorstCaseKernel> own;
  if (!kernel) {
    own.emplace(p, grid);
    kernel = &*own;
  }
  if (!(kernel->grid() == grid)) throw ShapeError("worst-case kernel grid mismatch");
  const auto n = p.A.rows();
  const AgentMoments mo = agent_moments(p, field, init, N, grid, agent, law);
  const Vector b = kernel->linear_term(p, mo.e_mean, mo.xT_mean);

  WorstCaseResult r;
  r.J0 = mo.J0;
  r.hessian_definite = kernel->concave();
  r.grad_scale = 1.0 + b.norm();
  if (!r.hessian_definite) {
    r.min_eigenvalue = kernel->min_eigenvalue_of_negated();
    r.f_steps = Vector::Zero(b.size());
    r.J_wo = std::numeric_limits<double>::infinity();
    r.grad_norm = b.norm();
    r.f_star = Trajectory::constant(grid, Vector::Zero(n));
    return r;
  }
  r.f_steps = kernel->maximize(b);
  r.J_wo = mo.J0 + 0.5 * b.dot(r.f_steps);
  r.grad_norm = worst_case_gradient(*kernel, b, r.f_steps);
  std::vector<Matrix> fv;
  fv.reserve(grid.size());
  const int K = grid.n_steps();
  for (int i = 0; i <= K; ++i) fv.emplace_back(r.f_steps.segment(std::min(i, K - 1) * n, n));
  r.f_star = Trajectory(grid, std::move(fv));

  if (replications > 0) {
    double sum = 0.0, sumsq = 0.0;
    for (int rep = 0; rep < replications; ++rep) {
      SimulationOptions opts;
      opts.replication = static_cast<std::uint32_t>(rep);
      opts.deviation = law;
      opts.deviation_agent = agent;
      const auto run = simulate_population(p, field, init, r.f_star, N, seed, grid, opts);
      const double c = evaluate_cost(run, p, agent, r.f_star).total;
      sum += c;
      sumsq += c * c;
    }
    const double m = sum / replications;
    r.mc_J_wo = m;
    r.mc_se = replications > 1
                  ? std::sqrt(std::max(0.0, (sumsq - replications * m * m) / (replications - 1)) / replications)
                  : 0.0;
  }
  return r;
}

}  // namespace rmfg
