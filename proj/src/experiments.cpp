#include "rmfg/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>

#include "rmfg/errors.hpp"

namespace rmfg {

LogLogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y,
                     const std::vector<double>& y_se) {
  if (x.size() < 3 || y.size() != x.size()) throw Error("log-log fit needs at least 3 points");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw Error("log-log fit needs positive data");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  const double n = static_cast<double>(lx.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  LogLogFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double var = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double c = (lx[i] - mx) / sxx;
    const double rel = i < y_se.size() ? y_se[i] / y[i] : 0.0;
    var += c * c * rel * rel;
  }
  f.slope_se = std::sqrt(var);
  f.ci_lo = f.slope - 1.96 * f.slope_se;
  f.ci_hi = f.slope + 1.96 * f.slope_se;
  return f;
}

ConvergenceReport convergence_experiment(const ModelParams& p, const StrategyField& field,
                                         const InitSpec& init, const TimeGrid& grid,
                                         const std::vector<std::size_t>& N_list, int replications,
                                         std::uint64_t seed) {
  if (N_list.size() < 3) throw Error("convergence experiment needs at least 3 values of N");
  if (!std::is_sorted(N_list.begin(), N_list.end())) throw Error("N_list must be ascending");
  if (replications < 2) throw Error("convergence experiment needs at least 2 replications");
  const auto n = p.A.rows();
  const Matrix g = rinv_bt(p);
  const Trajectory& ustar = field.consistency().u_bar;
  const std::size_t knots = grid.size();

  ConvergenceReport rep;
  rep.N_list = N_list;
  rep.replications = replications;
  rep.seed = seed;

  const Matrix S = control_gain(p);
  const Matrix DD = p.D * p.D.transpose();
  const auto& P = field.base().P.P;
  for (std::size_t N : N_list) {
    validate_init(init, N, n);
    std::vector<double> sum(knots, 0.0), sumsq(knots, 0.0);
    for (int r = 0; r < replications; ++r) {
      SimulationOptions opts;
      opts.replication = static_cast<std::uint32_t>(r);
      opts.references_only = true;
      opts.keep_paths = false;
      const auto f = field.base().f_hat;
      const auto run = simulate_population(p, field, init, f, N, seed, grid, opts);
      for (std::size_t k = 0; k < knots; ++k) {
        const double d = (run.u_avg[k] - ustar[k]).squaredNorm();
        sum[k] += d;
        sumsq[k] += d * d;
      }
    }
    double best = -1.0, best_se = 0.0;
    for (std::size_t k = 0; k < knots; ++k) {
      const double m = sum[k] / replications;
      if (m > best) {
        best = m;
        const double var = std::max(0.0, (sumsq[k] - replications * m * m) / (replications - 1));
        best_se = std::sqrt(var / replications);
      }
    }
    rep.stat.push_back(best);
    rep.stat_se.push_back(best_se);

    // Independent prediction: mean offset of the average control plus its variance.
    Vector mu = Vector::Zero(n);
    Matrix sigma0 = Matrix::Zero(n, n);
    for (std::size_t j = 0; j < N; ++j) {
      mu += init.mean(j, p);
      sigma0 += init.covariance(j, p);
    }
    mu /= static_cast<double>(N);
    sigma0 /= static_cast<double>(N);
    rep.initial_offset = (mu - p.m0).norm();
    const FeedbackStrategy fs = field.at(mu);
    Rk4Options o;
    o.project = [](Matrix& m) { m = 0.5 * (m + m.transpose()).eval(); };
    const Trajectory sigma = ode_rk4(
        [&](double t, const Matrix& s) -> Matrix {
          const Matrix Acl = p.A - S * P.sample(t);
          return Acl * s + s * Acl.transpose() + DD;
        },
        sigma0, grid, Direction::Forward, o);
    double pred = 0.0;
    for (std::size_t k = 0; k < knots; ++k) {
      const Matrix K = g * P[k];
      const double v = (K * sigma[k] * K.transpose()).trace() / static_cast<double>(N);
      const double off = (g * fs.limit.y_bar[k] - ustar[k]).squaredNorm();
      pred = std::max(pred, off + v);
    }
    rep.predicted.push_back(pred);
  }
  std::vector<double> xs(N_list.begin(), N_list.end());
  try {
    rep.fit = fit_loglog(xs, rep.stat, rep.stat_se);
    rep.fit_valid = true;
  } catch (const Error&) {
    rep.fit_valid = false;
  }
  return rep;
}

std::vector<Deviation> deviation_family(const ModelParams& p, const FeedbackStrategy& fs,
                                        const DeviationFamilyOptions& opts, std::uint64_t seed) {
  std::vector<Deviation> out;
  const AffineLaw eq = equilibrium_law(p, fs);
  if (opts.include_self) out.push_back({"self", eq});
  for (double d : opts.scales) {
    for (double sgn : {1.0, -1.0}) {
      const double s = 1.0 + sgn * d;
      AffineLaw law{eq.L.map([&](std::size_t, const Matrix& v) -> Matrix { return s * v; }),
                    eq.l.map([&](std::size_t, const Matrix& v) -> Matrix { return s * v; })};
      out.push_back({"scaled " + std::to_string(s), std::move(law)});
    }
  }
  const auto n = p.A.rows();
  const Matrix g = rinv_bt(p);
  std::mt19937_64 rng(seed ^ 0x5eedULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double pscale = fs.P.P.max_norm() + 1e-3;
  const double fscale = fs.phi.max_norm() + 1e-3;
  for (int r = 0; r < opts.random_count; ++r) {
    Matrix dP(n, n);
    Vector dphi(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      dphi(i) = normal(rng);
      for (Eigen::Index j = 0; j < n; ++j) dP(i, j) = normal(rng);
    }
    dP = 0.5 * (dP + dP.transpose()).eval();
    dP *= opts.random_size * pscale / std::max(dP.norm(), 1e-12);
    dphi *= opts.random_size * fscale / std::max(dphi.norm(), 1e-12);
    AffineLaw law{fs.P.P.map([&](std::size_t, const Matrix& v) -> Matrix { return -g * (v + dP); }),
                  fs.phi.map([&](std::size_t, const Matrix& v) -> Matrix { return g * (v + dphi); })};
    out.push_back({"random " + std::to_string(r), std::move(law)});
  }
  return out;
}

AffineLaw pilot_best_response(const ModelParams& p, const FeedbackStrategy& fs, const Trajectory& xN,
                              const TimeGrid& grid) {
  const auto n = p.A.rows();
  const Matrix S = control_gain(p);
  const auto& P = fs.P.P;
  const Trajectory phi = ode_rk4(
      [&](double t, const Matrix& v) -> Matrix {
        const Matrix Pt = P.sample(t);
        const Vector x = xN.sample(t);
        return -(p.A - S * Pt).transpose() * v + Pt * (p.G * x + fs.f_hat.sample(t)) -
               p.Q * (p.Gamma * x + p.eta);
      },
      Vector::Zero(n), grid, Direction::Backward);
  const Matrix g = rinv_bt(p);
  return {P.map([&](std::size_t, const Matrix& v) -> Matrix { return -g * v; }),
          phi.map([&](std::size_t, const Matrix& v) -> Matrix { return g * v; })};
}

NashGapReport nash_gap_experiment(const ModelParams& p, const StrategyField& field,
                                  const InitSpec& init, std::size_t N, const TimeGrid& grid,
                                  const DeviationFamilyOptions& family, int replications,
                                  std::uint64_t seed, const WorstCaseKernel* kernel) {
  std::optional<WorstCaseKernel> own;
  if (!kernel) {
    own.emplace(p, grid);
    kernel = &*own;
  }
  NashGapReport rep;
  rep.N = N;
  rep.replications = replications;
  rep.seed = seed;
  const FeedbackStrategy fs0 = field.at(init.mean(0, p));
  const AffineLaw eq = equilibrium_law(p, fs0);
  const auto eq_res = worst_case_f(p, field, init, N, grid, 0, 0, seed, eq, kernel);
  if (!eq_res.hessian_definite) {
    throw Error("worst-case functional is not concave at the equilibrium profile");
  }
  rep.J_eq = eq_res.J_wo;

  double det_max = -std::numeric_limits<double>::infinity();
  const auto fam = deviation_family(p, fs0, family, seed);
  for (const auto& dev : fam) {
    const auto res = worst_case_f(p, field, init, N, grid, 0, 0, seed, dev.law, kernel);
    NashGapRow row{dev.name, res.J_wo, rep.J_eq - res.J_wo, 0.0, res.hessian_definite};
    if (!row.concave) {
      rep.warnings.push_back(dev.name + ": worst-case functional not concave, excluded");
    } else {
      det_max = std::max(det_max, row.gap);
    }
    rep.rows.push_back(row);
  }

  std::vector<double> pilot_gaps;
  const int reps = std::max(1, replications);
  for (int r = 0; r < reps; ++r) {
    double pilot_gap = -std::numeric_limits<double>::infinity();
    if (family.pilot_best_response) {
      SimulationOptions opts;
      opts.replication = static_cast<std::uint32_t>(r);
      opts.keep_paths = false;
      const auto run = simulate_population(p, field, init, fs0.f_hat, N, seed, grid, opts);
      const AffineLaw br = pilot_best_response(p, fs0, run.x_avg, grid);
      const auto res = worst_case_f(p, field, init, N, grid, 0, 0, seed, br, kernel);
      if (res.hessian_definite) {
        pilot_gap = rep.J_eq - res.J_wo;
        pilot_gaps.push_back(pilot_gap);
      }
    }
    rep.eps_per_replication.push_back(std::max({0.0, det_max, pilot_gap}));
  }
  if (!pilot_gaps.empty()) {
    double m = 0.0, s2 = 0.0;
    for (double g : pilot_gaps) m += g;
    m /= static_cast<double>(pilot_gaps.size());
    for (double g : pilot_gaps) s2 += (g - m) * (g - m);
    const double se = pilot_gaps.size() > 1 ? std::sqrt(s2 / (pilot_gaps.size() - 1) / pilot_gaps.size()) : 0.0;
    rep.rows.push_back({"pilot best response", rep.J_eq - m, m, se, true});
  }
  double m = 0.0, s2 = 0.0;
  for (double e : rep.eps_per_replication) m += e;
  m /= static_cast<double>(rep.eps_per_replication.size());
  for (double e : rep.eps_per_replication) s2 += (e - m) * (e - m);
  rep.eps_hat = m;
  const auto cnt = rep.eps_per_replication.size();
  rep.eps_se = cnt > 1 ? std::sqrt(s2 / (cnt - 1) / cnt) : 0.0;
  return rep;
}

SubspaceBestResponse subspace_best_response(const ModelParams& p, const StrategyField& field,
                                            const InitSpec& init, std::size_t N,
                                            const TimeGrid& grid, int pieces,
                                            const WorstCaseKernel* kernel) {
  if (pieces < 1) throw Error("subspace_best_response needs at least one piece");
  std::optional<WorstCaseKernel> own;
  if (!kernel) {
    own.emplace(p, grid);
    kernel = &*own;
  }
  const FeedbackStrategy fs0 = field.at(init.mean(0, p));
  const AffineLaw eq = equilibrium_law(p, fs0);
  const auto n1 = p.B.cols();
  const int dim = pieces * static_cast<int>(n1);
  const double T = grid.horizon();
  auto law_at = [&](const Vector& c) {
    AffineLaw law = eq;
    law.l = eq.l.map([&](std::size_t k, const Matrix& v) -> Matrix {
      const double t = grid.knot(k) - grid.t0();
      const int piece = std::min(pieces - 1, static_cast<int>(t / T * pieces));
      return v + c.segment(piece * n1, n1);
    });
    return law;
  };
  auto J = [&](const Vector& c) {
    const auto r = worst_case_f(p, field, init, N, grid, 0, 0, 0, law_at(c), kernel);
    if (!r.hessian_definite) throw Error("worst-case functional is not concave");
    return r.J_wo;
  };
  const double h = 0.1 * (1.0 + eq.l.max_norm());
  const double J0 = J(Vector::Zero(dim));
  Vector g(dim);
  Matrix Hs(dim, dim);
  std::vector<double> jp(dim), jm(dim);
  for (int i = 0; i < dim; ++i) {
    Vector e = Vector::Zero(dim);
    e(i) = h;
    jp[i] = J(e);
    jm[i] = J(-e);
    g(i) = (jp[i] - jm[i]) / (2 * h);
    Hs(i, i) = (jp[i] - 2 * J0 + jm[i]) / (h * h);
  }
  for (int i = 0; i < dim; ++i) {
    for (int j = i + 1; j < dim; ++j) {
      Vector a = Vector::Zero(dim), b = Vector::Zero(dim);
      a(i) = h;
      b(j) = h;
      const double v = (J(a + b) - J(a - b) - J(b - a) + J(-a - b)) / (4 * h * h);
      Hs(i, j) = Hs(j, i) = v;
    }
  }
  Eigen::LLT<Matrix> llt(Hs);
  if (llt.info() != Eigen::Success) return {eq, 0.0, dim, false};
  const Vector c = -llt.solve(g);
  return {law_at(c), J0 - J(c), dim, true};
}

RandomModeReport random_initial_mode(const ModelParams& p, const StrategyField& field,
                                     const InitSpec& init, const TimeGrid& grid,
                                     const std::vector<std::size_t>& N_list, int replications,
                                     std::uint64_t seed) {
  if (init.mode != InitMode::Random) throw Error("random_initial_mode needs a random initial specification");
  RandomModeReport r;
  r.convergence = convergence_experiment(p, field, init, grid, N_list, replications, seed);
  r.mean_offset = r.convergence.initial_offset;
  return r;
}

nlohmann::json to_json(const ConvergenceReport& r) {
  nlohmann::json j;
  j["N"] = r.N_list;
  j["stat"] = r.stat;
  j["stat_se"] = r.stat_se;
  j["predicted"] = r.predicted;
  j["initial_offset"] = r.initial_offset;
  j["replications"] = r.replications;
  j["seed"] = r.seed;
  if (r.fit_valid) {
    j["fit"] = {{"slope", r.fit.slope}, {"intercept", r.fit.intercept}, {"slope_se", r.fit.slope_se},
                {"ci", {r.fit.ci_lo, r.fit.ci_hi}}};
  } else {
    j["fit"] = nullptr;
  }
  return j;
}

nlohmann::json to_json(const NashGapReport& r) {
  nlohmann::json j;
  j["N"] = r.N;
  j["J_eq"] = r.J_eq;
  j["eps_hat"] = r.eps_hat;
  j["eps_se"] = r.eps_se;
  j["eps_per_replication"] = r.eps_per_replication;
  j["replications"] = r.replications;
  j["seed"] = r.seed;
  j["warnings"] = r.warnings;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"name", row.name}, {"J_wo", row.J_wo}, {"gap", row.gap}, {"gap_se", row.gap_se},
                    {"concave", row.concave}});
  }
  j["deviations"] = rows;
  return j;
}

}  // namespace rmfg
