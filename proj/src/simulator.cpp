#include "rmfg/simulator.hpp"

#include <cmath>
#include <map>

#include "rmfg/errors.hpp"
#include "rmfg/noise.hpp"
#include "rmfg/parallel.hpp"

namespace rmfg {

AffineLaw equilibrium_law(const ModelParams& p, const FeedbackStrategy& fs) {
  const Matrix g = rinv_bt(p);
  return {fs.P.P.map([&](std::size_t, const Matrix& P) -> Matrix { return -g * P; }),
          fs.phi.map([&](std::size_t, const Matrix& v) -> Matrix { return g * v; })};
}

Trajectory PopulationRun::path(std::size_t agent) const {
  const Matrix& m = paths.at(agent);
  std::vector<Matrix> v;
  v.reserve(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index k = 0; k < m.cols(); ++k) v.emplace_back(m.col(k));
  return Trajectory(grid, std::move(v));
}

Trajectory PopulationRun::control(std::size_t agent) const {
  const Matrix& m = controls.at(agent);
  std::vector<Matrix> v;
  v.reserve(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index k = 0; k < m.cols(); ++k) v.emplace_back(m.col(k));
  return Trajectory(grid, std::move(v));
}

Vector initial_state(const InitSpec& init, const ModelParams& p, std::size_t agent,
                     std::uint64_t seed, std::uint32_t replication) {
  Vector x = init.mean(agent, p);
  if (init.mode == InitMode::Random) {
    const Matrix cov = init.covariance(agent, p);
    if (cov.norm() > 0.0) {
      // PSD square root via the symmetric eigensolver (handles singular covariances).
      Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (cov + cov.transpose()));
      const Vector ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
      const Matrix root = es.eigenvectors() * ev.asDiagonal();
      const NoiseSource src(seed);
      x += root * src.normal_vector(replication, static_cast<std::uint32_t>(agent),
                                    static_cast<int>(p.A.rows()));
    }
  }
  return x;
}

namespace {

struct KeyLess {
  bool operator()(const Vector& a, const Vector& b) const {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
  }
};

}  // namespace

PopulationRun simulate_population(const ModelParams& p, const StrategyField& field,
                                  const InitSpec& init, const Trajectory& f, std::size_t N,
                                  std::uint64_t seed, const TimeGrid& grid,
                                  const SimulationOptions& opts) {
  validate(p);
  if (N == 0) throw Error("population needs N >= 1");
  if (!(f.grid() == grid)) throw ShapeError("disturbance is not on the simulation grid");
  if (!(field.grid() == grid)) throw ShapeError("strategy is not on the simulation grid");
  validate_init(init, N, p.A.rows());
  const auto n = p.A.rows();
  const auto n1 = p.B.cols();
  const auto n2 = p.D.cols();
  const std::size_t knots = grid.size();
  const int steps = grid.n_steps();
  const double dt = grid.dt();

  // One strategy per distinct initial mean.
  std::map<Vector, std::size_t, KeyLess> index;
  std::vector<FeedbackStrategy> strategies;
  std::vector<std::size_t> which(N);
  for (std::size_t j = 0; j < N; ++j) {
    const Vector mu = init.mean(j, p);
    auto it = index.find(mu);
    if (it == index.end()) {
      it = index.emplace(mu, strategies.size()).first;
      strategies.push_back(field.at(mu));
    }
    which[j] = it->second;
  }
  std::vector<AffineLaw> laws;
  laws.reserve(strategies.size());
  for (const auto& s : strategies) laws.push_back(equilibrium_law(p, s));

  const NoiseSource noise(seed);
  std::vector<Matrix> refs(N), ctrls(N), dws(N);
  std::vector<Vector> x0(N);
  parallel_for(N, [&](std::size_t j) {
    const FeedbackStrategy& fs = strategies[which[j]];
    const AffineLaw& law = (j == opts.deviation_agent && opts.deviation) ? *opts.deviation : laws[which[j]];
    const Matrix dw = noise.brownian(opts.replication, static_cast<std::uint32_t>(j),
                                     static_cast<int>(n2), grid).increments;
    Matrix xi(n, static_cast<Eigen::Index>(knots));
    Matrix u(n1, static_cast<Eigen::Index>(knots));
    x0[j] = initial_state(init, p, j, seed, opts.replication);
    Vector s = x0[j];
    for (std::size_t k = 0; k < knots; ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      xi.col(kk) = s;
      u.col(kk) = law.L[k] * s + law.l[k];
      if (k + 1 == knots) break;
      s += (p.A * s + p.B * u.col(kk) + p.G * fs.limit.m_bar[k] + p.gamma * fs.limit.p_bar[k]) * dt +
           p.D * dw.col(kk);
    }
    if (!xi.allFinite()) throw EscapeTimeError(j, grid.t1(), INFINITY);
    refs[j] = std::move(xi);
    ctrls[j] = std::move(u);
    dws[j] = dw;
  });

  PopulationRun run;
  run.N = N;
  run.seed = seed;
  run.replication = opts.replication;
  run.grid = grid;
  run.f_used = f;

  std::vector<Matrix> uavg(knots, Matrix::Zero(n1, 1)), ravg(knots, Matrix::Zero(n, 1));
  for (std::size_t k = 0; k < knots; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    for (std::size_t j = 0; j < N; ++j) {
      uavg[k] += ctrls[j].col(kk);
      ravg[k] += refs[j].col(kk);
    }
    uavg[k] /= static_cast<double>(N);
    ravg[k] /= static_cast<double>(N);
  }
  run.u_avg = Trajectory(grid, std::move(uavg));
  run.ref_avg = Trajectory(grid, std::move(ravg));

  if (!opts.references_only) {
    std::vector<Matrix> xs(N);
    for (std::size_t j = 0; j < N; ++j) {
      xs[j].resize(n, static_cast<Eigen::Index>(knots));
      xs[j].col(0) = x0[j];
    }
    std::vector<Matrix> xavg(knots, Matrix::Zero(n, 1));
    for (int k = 0; k <= steps; ++k) {
      Vector mean = Vector::Zero(n);
      for (std::size_t j = 0; j < N; ++j) mean += xs[j].col(k);
      mean /= static_cast<double>(N);
      xavg[static_cast<std::size_t>(k)] = mean;
      if (k == steps) break;
      const Vector common = p.G * mean + f[static_cast<std::size_t>(k)];
      for (std::size_t j = 0; j < N; ++j) {
        const Vector x = xs[j].col(k);
        xs[j].col(k + 1) = x + (p.A * x + p.B * ctrls[j].col(k) + common) * dt + p.D * dws[j].col(k);
      }
    }
    for (std::size_t j = 0; j < N; ++j) {
      if (!xs[j].allFinite()) throw EscapeTimeError(j, grid.t1(), INFINITY);
    }
    run.x_avg = Trajectory(grid, std::move(xavg));
    if (opts.keep_paths) run.paths = std::move(xs);
  } else {
    run.x_avg = run.ref_avg;
  }
  if (opts.keep_paths) {
    run.references = std::move(refs);
    run.controls = std::move(ctrls);
  }
  return run;
}

CostBreakdown evaluate_cost(const PopulationRun& run, const ModelParams& p, std::size_t agent,
                            const Trajectory& f) {
  if (agent >= run.N) throw Error("agent index out of range");
  if (!(f.grid() == run.grid)) throw ShapeError("evaluate_cost: disturbance grid mismatch");
  if (run.paths.empty() || run.controls.empty()) throw Error("evaluate_cost needs kept physical paths");
  const Matrix& x = run.paths[agent];
  const Matrix& u = run.controls[agent];
  const std::size_t knots = run.grid.size();
  std::vector<double> tr(knots), ef(knots), cr(knots);
  for (std::size_t k = 0; k < knots; ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    const Vector e = x.col(kk) - p.Gamma * run.x_avg[k] - p.eta;
    tr[k] = e.dot(p.Q * e);
    ef[k] = u.col(kk).dot(p.R * u.col(kk));
    cr[k] = -f[k].squaredNorm() / p.gamma;
  }
  CostBreakdown c;
  const double dt = run.grid.dt();
  c.tracking = trapezoid(tr, dt);
  c.effort = trapezoid(ef, dt);
  c.disturbance_credit = trapezoid(cr, dt);
  const Vector xT = x.col(x.cols() - 1);
  c.terminal = xT.dot(p.H * xT);
  c.total = c.tracking + c.effort + c.disturbance_credit + c.terminal;
  return c;
}

}  // namespace rmfg
