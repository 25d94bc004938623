// Acceptance suite: one pass/fail line per criterion.
//   acceptance --criterion N   (N in 1..9, or 0 for all)

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rmfg/conditions.hpp"
#include "rmfg/consistency.hpp"
#include "rmfg/errors.hpp"
#include "rmfg/experiments.hpp"
#include "rmfg/parallel.hpp"
#include "rmfg/riccati.hpp"
#include "rmfg/simulator.hpp"
#include "rmfg/strategy.hpp"
#include "rmfg/worst_case.hpp"

using namespace rmfg;

namespace {

Matrix s(double v) { return Matrix::Constant(1, 1, v); }
Vector sv(double v) { return Vector::Constant(1, v); }

ModelParams scalar(double A, double B, double G, double D, double Gamma, double eta, double Q,
                   double R, double gamma, double H, double T, double m0) {
  return {s(A), s(B), s(G), s(D), s(Gamma), sv(eta), s(Q), s(R), gamma, s(H), T, sv(m0)};
}

ModelParams ex22(double T = 1.3) { return scalar(0.5, 1, 0.25, 0.3, 0.8, 1, 1, 1.5, 1, 0, T, 1); }

struct Outcome {
  bool pass = true;
  std::ostringstream msg;

  void check(bool ok, const std::string& what) {
    if (!ok) pass = false;
    msg << "\n    [" << (ok ? "ok" : "FAIL") << "] " << what;
  }
  void note(const std::string& what) { msg << "\n    " << what; }
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

template <class... Args>
std::string fmtn(const char* f, Args... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void criterion1(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto p = ex22();
  const auto cf = scalar_closed_form(0.75, qhat(p)(0, 0), 1.0, 1.3);
  o.check(std::abs(cf.alpha - 0.722842) <= 1e-5, fmt("alpha = %.7f (0.722842)", cf.alpha));
  o.check(std::abs(cf.lambda1 + 0.027158) <= 1e-5, fmt("lambda1 = %.7f (-0.027158)", cf.lambda1));
  o.check(std::abs(cf.lambda2 + 1.472842) <= 1e-5, fmt("lambda2 = %.7f (-1.472842)", cf.lambda2));
  o.check(std::abs(cf.Tmax - 2.752198) <= 1e-5, fmt("T_max = %.7f (2.752198)", cf.Tmax));
  const TimeGrid grid(1.3, 2000);
  const auto P = solve_indefinite_P(p, grid);
  double err = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    err = std::max(err, std::abs(P.P[k](0, 0) - cf(grid.knot(k))));
  }
  o.check(err <= 1e-6, fmt("sup |P - closed form| = %.3e at T=1.3", err));
  bool escaped = false;
  try {
    solve_indefinite_P(ex22(3.0), TimeGrid(3.0, 2000));
  } catch (const EscapeTimeError& e) {
    escaped = true;
    o.note(fmtn("diagnostic: log(lambda2/lambda1)/(2 alpha) = %.6f; backward RK4 from T=3 crosses "
                "1e8 at t=%.4f, i.e. after %.4f", cf.Tmax, e.time(), 3.0 - e.time()));
  }
  o.check(escaped, "EscapeTime raised for T=3");
  const double el = seconds_since(t0);
  o.check(el < 1.0, fmt("runtime %.3f s < 1 s", el));
}

void criterion2(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto p = scalar(-0.5, 1, 0.25, 0.3, 0.8, 1, 1, 1.5, 1, 0, 10, 1);
  const TimeGrid grid(10.0, 2000);
  const auto r = check_h1_determinant(p, grid);
  double err_literal = 0.0, err_corrected = 0.0;
  for (int i = 0; i < 10; ++i) {
    const std::size_t k = static_cast<std::size_t>(i) * 2000 / 9;
    const double t = grid.knot(k);
    const double literal = (4.0 / 3.0) * std::exp(0.15 * t) + (1.0 / 3.0) * std::exp(-0.15 * t);
    const double corrected = (4.0 / 3.0) * std::exp(0.15 * t) - (1.0 / 3.0) * std::exp(-0.15 * t);
    err_literal = std::max(err_literal, std::abs(r.dets[k] - literal));
    err_corrected = std::max(err_corrected, std::abs(r.dets[k] - corrected));
  }
  o.check(err_literal <= 1e-8,
          fmt("det vs (4/3)e^{0.15t} + (1/3)e^{-0.15t} at 10 knots: max err %.3e", err_literal));
  o.note(fmt("diagnostic: det vs (4/3)e^{0.15t} - (1/3)e^{-0.15t}: max err %.3e "
             "(det(0) = 1 requires the minus sign)",
             err_corrected));
  o.check(r.verdict, fmt("verdict true for T=10 (margin %.6f)", r.margin));
  const double el = seconds_since(t0);
  o.check(el < 1.0, fmt("runtime %.3f s < 1 s", el));
}

void criterion3(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto p = ex22();
  const TimeGrid grid(1.3, 2000);
  const auto K = solve_indefinite_K(p, grid);
  const auto c = check_contraction(p, K, grid);
  o.check(std::abs(c.c1 - 0.171417) <= 1e-4, fmt("c1 = %.6f (0.171417)", c.c1));
  o.check(c.lhs <= 0.861493 + 1e-3, fmt("lhs = %.6f <= 0.861493", c.lhs));
  o.check(c.verdict, "contraction verdict true");
  const auto fp = fixed_point_iterate(p, K, grid);
  const double ratio = observed_ratio(fp);
  o.check(ratio <= 0.87 + 0.05, fmtn("fixed point converged in %d sweeps, ratio %.4f <= 0.92",
                                     fp.iterations, ratio));
  const double el = seconds_since(t0);
  o.check(el < 5.0, fmt("runtime %.3f s < 5 s", el));
}

void criterion4(Outcome& o) {
  const double A = 0.5, G = 0.25;
  const auto p = scalar(A, 1, G, 0.3, 1.0, 1, 1, 1.5, 1, 0, 10, 1);
  const TimeGrid grid(10.0, 2000);
  const auto h1 = check_h1_determinant(p, grid);
  double err = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    err = std::max(err, std::abs(h1.dets[k] - std::exp(-(A + G) * grid.knot(k))));
  }
  o.check(err <= 1e-8, fmt("block det vs e^{-(A+G)t}: max err %.3e", err));
  o.check(std::abs(h1.margin - std::exp(-(A + G) * 10.0)) <= 1e-8,
          fmt("margin %.6e = e^{-(A+G)T}", h1.margin));
  const auto cq = compute_Cq_bound(p, grid);
  o.check(cq.Cq == 0.0, fmt("C_q = %g", cq.Cq));
  const auto b = check_bvp_solvability(p);
  const double want = std::exp(-(2 * A + G) * 10.0);
  o.check(std::abs(b.det - want) <= 1e-8, fmtn("BVP det %.6e vs e^{-(2A+G)T} %.6e", b.det, want));
  for (double T : {0.5, 2.0, 10.0}) {
    auto q = p;
    q.T = T;
    try {
      const auto sol = solve_bvp_shooting(q, TimeGrid(T, 2000));
      o.check(sol.residual <= 1e-6, fmtn("shooting T=%g residual %.3e", T, sol.residual));
    } catch (const Error& e) {
      o.check(false, fmtn("shooting T=%g failed: %s", T, e.what()));
    }
  }
}

void criterion5(Outcome& o) {
  const auto p = ex22();
  const TimeGrid grid(1.3, 2000);
  const auto sh = solve_bvp_shooting(p, grid);
  const auto fp = fixed_point_iterate(p, solve_indefinite_K(p, grid), grid);
  const double gap = std::max({sup_distance(sh.m, fp.m), sup_distance(sh.p, fp.p),
                               sup_distance(sh.y, fp.y)});
  o.check(gap <= 1e-6, fmt("sup gap shooting vs fixed point %.3e", gap));
  try {
    const auto eq = validate_equivalences(sh, p, grid);
    o.check(eq.passed, fmtn("equivalences: |xbar-mbar| %.2e, m %.2e, p %.2e, y %.2e", eq.x_minus_m,
                            eq.m_gap, eq.p_gap, eq.y_gap));
  } catch (const EquivalenceViolation& e) {
    o.check(false, std::string("equivalences: ") + e.what());
  }
}

void criterion6(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto p = ex22();
  const TimeGrid grid(1.3, 500);
  const auto field = synthesize(p, grid);
  const std::vector<std::size_t> Ns{8, 32, 128, 512};
  const auto base = convergence_experiment(p, field, shared_init(p.m0), grid, Ns, 64, 2024);
  std::string row;
  for (std::size_t i = 0; i < Ns.size(); ++i) {
    row += fmtn(" N=%zu: %.3e (+-%.1e, CLT %.3e)", Ns[i], base.stat[i], base.stat_se[i],
                base.predicted[i]);
  }
  o.note("statistic" + row);
  o.check(base.fit_valid && std::abs(base.fit.slope + 1.0) <= 0.2,
          fmtn("log-log slope %.3f (se %.3f) in -1 +- 0.2", base.fit.slope, base.fit.slope_se));
  const auto r1 = convergence_experiment(p, field, shared_init(p.m0 + sv(0.1)), grid, Ns, 64, 2024);
  const auto r2 = convergence_experiment(p, field, shared_init(p.m0 + sv(0.2)), grid, Ns, 64, 2024);
  const double ratio = r2.stat.back() / r1.stat.back();
  o.check(std::abs(ratio - 4.0) <= 1.0,
          fmtn("plateau at N=512: offset 0.1 %.4e, offset 0.2 %.4e, ratio %.3f in 4 +- 1",
               r1.stat.back(), r2.stat.back(), ratio));
  const double el = seconds_since(t0);
  o.check(el < 300.0, fmt("runtime %.1f s < 300 s", el));
}

void criterion7(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto p = ex22();
  const TimeGrid grid(1.3, 500);
  const auto field = synthesize(p, grid);
  const WorstCaseKernel kernel(p, grid);
  const std::vector<std::size_t> Ns{32, 128, 512};
  std::vector<double> x, eps, se;
  bool nonneg = true, self_zero = true;
  for (std::size_t N : Ns) {
    const auto r = nash_gap_experiment(p, field, shared_init(p.m0), N, grid, {}, 16, 99, &kernel);
    double best_det = -1e300;
    for (const auto& row : r.rows) {
      if (row.name == "self" && row.gap != 0.0) self_zero = false;
      if (row.name != "self" && row.name != "pilot best response") best_det = std::max(best_det, row.gap);
    }
    double pilot = 0.0;
    for (const auto& row : r.rows) if (row.name == "pilot best response") pilot = row.gap;
    nonneg = nonneg && r.eps_hat >= 0.0;
    const auto br = subspace_best_response(p, field, shared_init(p.m0), N, grid, 8, &kernel);
    o.note(fmtn("N=%zu: eps_hat %.3e (+-%.1e), best fixed deviation gap %.3e, mean pilot gap "
                "%.3e, exact 8-piece best response gain %.3e",
                N, r.eps_hat, r.eps_se, best_det, pilot, br.gain));
    x.push_back(static_cast<double>(N));
    eps.push_back(r.eps_hat);
    se.push_back(r.eps_se);
  }
  o.check(nonneg, "eps_hat >= 0");
  o.check(self_zero, "self-deviation gap exactly 0");
  bool mono = true;
  for (std::size_t i = 0; i + 1 < eps.size(); ++i) {
    if (eps[i + 1] > eps[i] + se[i] + se[i + 1]) mono = false;
  }
  o.check(mono, "eps_hat decreases within 1-sigma bands");
  bool positive = true;
  for (double e : eps) positive = positive && e > 0.0;
  if (positive) {
    const auto fit = fit_loglog(x, eps, se);
    o.check(fit.slope >= -0.8 && fit.slope <= -0.2,
            fmtn("fitted exponent %.3f (se %.3f) in [-0.8, -0.2]", fit.slope, fit.slope_se));
  } else {
    o.check(false, "fitted exponent in [-0.8, -0.2]: eps_hat is zero at some N, no fit");
  }
  const double el = seconds_since(t0);
  o.check(el < 600.0, fmt("runtime %.1f s < 600 s", el));
}

// Returns sup-norm error of f* against gamma pbar at step midpoints relative to its scale.
void worst_case_at(Outcome& o, double T, bool expect_concave) {
  auto p = ex22(T);
  p.G.setZero();
  p.Gamma.setZero();
  const TimeGrid grid(T, 2000);
  const auto field = synthesize(p, grid);
  const auto r = worst_case_f(p, field, shared_init(p.m0), 1, grid, 0, 0, 1);
  if (!expect_concave) {
    o.note(fmtn("T=%g: (H1) holds by Riccati test: %s; worst-case Hessian definite: %s, "
                "smallest eigenvalue of its negation %.3e",
                T, check_h1_riccati(p, grid) ? "yes" : "no", r.hessian_definite ? "yes" : "no",
                r.min_eigenvalue));
    return;
  }
  o.check(r.hessian_definite, fmt("T=%g: worst-case functional concave", T));
  double err = 0.0, scale = 0.0;
  const auto& fh = field.base().f_hat;
  for (int i = 0; i < grid.n_steps(); ++i) {
    const Vector want = fh.sample(grid.knot(i) + 0.5 * grid.dt());
    err = std::max(err, (r.f_steps.segment(i, 1) - want).norm());
    scale = std::max(scale, want.norm());
  }
  o.check(err <= 1e-4 * scale, fmtn("T=%g: sup |f* - gamma pbar| = %.3e, scale %.4f", T, err, scale));
  o.check(r.grad_norm <= 1e-8 * r.grad_scale,
          fmtn("T=%g: gradient norm at f* %.3e (scale %.4f)", T, r.grad_norm, r.grad_scale));
}

void criterion8(Outcome& o) {
  // With G = 0 and Gamma = 0 the indefinite Riccati equation escapes at T = 1.2092, so the
  // maximization is checked at T = 1.0 and the T = 1.3 outcome is reported.
  worst_case_at(o, 1.0, true);
  worst_case_at(o, 1.3, false);
}

void criterion9(Outcome& o) {
  const auto p = ex22();
  const TimeGrid grid(1.3, 2000);

  // ODE residuals and boundary conditions.
  const auto Pi = solve_indefinite_P(p, grid);
  const auto Ps = solve_standard_P(p, grid);
  const double ri = central_residual(Pi.P, riccati_field(p, RiccatiKind::IndefiniteP));
  const double rs = central_residual(Ps.P, riccati_field(p, RiccatiKind::Standard));
  o.check(ri <= 1e-6 && rs <= 1e-6, fmtn("Riccati residuals %.2e, %.2e", ri, rs));
  o.check((Pi.P.back() + p.H).norm() == 0.0 && (Ps.P.back() - p.H).norm() == 0.0,
          "Riccati terminal conditions");
  const auto sh = solve_bvp_shooting(p, grid);
  o.check(sh.residual <= 1e-6 && sh.boundary_error <= 1e-8,
          fmtn("consistency residual %.2e, boundary error %.2e", sh.residual, sh.boundary_error));

  // Symmetry on a two-dimensional datum.
  ModelParams q;
  q.A = Matrix{{0.2, 0.4}, {-0.3, 0.1}};
  q.B = Matrix{{1.0}, {0.5}};
  q.G = Matrix{{0.1, 0.0}, {0.05, 0.2}};
  q.D = Matrix::Identity(2, 2) * 0.2;
  q.Gamma = Matrix::Identity(2, 2) * 0.5;
  q.eta = Vector{{1.0, -0.5}};
  q.Q = Matrix{{1.0, 0.2}, {0.2, 0.8}};
  q.R = s(1.2);
  q.gamma = 0.5;
  q.H = Matrix{{0.3, 0.0}, {0.0, 0.1}};
  q.T = 1.0;
  q.m0 = Vector{{1.0, 0.0}};
  const TimeGrid g2(1.0, 1000);
  const auto P2 = solve_indefinite_P(q, g2);
  const auto S2 = solve_standard_P(q, g2);
  double asym = 0.0;
  for (std::size_t k = 0; k < g2.size(); ++k) {
    asym = std::max({asym, (P2.P[k] - P2.P[k].transpose()).norm(),
                     (S2.P[k] - S2.P[k].transpose()).norm()});
  }
  o.check(asym == 0.0, fmt("Riccati solutions symmetric (max asymmetry %.1e)", asym));
  const auto gram = assemble_h2_form(q, g2, 8);
  const double gasym = (gram - gram.transpose()).norm() / (1.0 + gram.norm());
  o.check(gasym <= 1e-10, fmt("H2 Gram matrix symmetric (relative %.1e)", gasym));

  // Reconstruction identity.
  const auto field = synthesize(p, grid);
  const auto& fs = field.base();
  const double rec = reconstruction_error(fs);
  o.check(rec <= 1e-8 * (1.0 + fs.limit.y_bar.max_norm()), fmt("|-P xbar + phi - ybar| = %.2e", rec));
  const auto fs2 = synthesize(q, g2).base();
  o.check(reconstruction_error(fs2) <= 1e-8 * (1.0 + fs2.limit.y_bar.max_norm()),
          fmt("reconstruction, two-dimensional datum: %.2e", reconstruction_error(fs2)));

  // (H1) method agreement on random scalar data.
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  int agree = 0, h1true = 0;
  for (int i = 0; i < 20; ++i) {
    const double T = 0.5 + 2.5 * U(rng);
    const auto r = scalar(-1 + 2 * U(rng), 1, -0.5 + U(rng), 0.3, 1.5 * U(rng), 1, 2 * U(rng), 1,
                          0.2 + 1.8 * U(rng), U(rng), T, 1);
    const TimeGrid gr(T, 1000);
    const bool a = check_h1_determinant(r, gr).verdict;
    const bool b = check_h1_riccati(r, gr);
    agree += (a == b);
    h1true += a;
  }
  o.check(agree == 20, fmtn("(H1) determinant vs Riccati agree on %d/20 random data (%d true)", agree,
                            h1true));

  // (H2) stability under basis doubling.
  const auto h2 = check_h2(p, grid, 32);
  const double drift = std::abs(h2.delta0 - h2.delta0_doubled) / h2.delta0;
  o.check(h2.verdict && drift <= 1e-2,
          fmtn("delta0 %.6f at 32, %.6f at 64 (relative change %.1e)", h2.delta0,
               h2.delta0_doubled, drift));

  // Bit-exact reproducibility across thread counts.
  const TimeGrid gs(1.3, 200);
  const auto fsim = synthesize(p, gs);
  InitSpec init;
  init.mode = InitMode::Random;
  init.means = {p.m0};
  init.covariances = {s(0.04)};
  set_thread_count(1);
  const auto a = simulate_population(p, fsim, init, fsim.base().f_hat, 64, 5, gs);
  set_thread_count(4);
  const auto b = simulate_population(p, fsim, init, fsim.base().f_hat, 64, 5, gs);
  set_thread_count(0);
  bool same = a.paths.size() == b.paths.size();
  for (std::size_t i = 0; same && i < a.paths.size(); ++i) {
    same = a.paths[i] == b.paths[i] && a.controls[i] == b.controls[i] &&
           a.references[i] == b.references[i];
  }
  o.check(same, "simulate_population bit-exact with 1 and 4 threads");

  // Worst-case stationarity and the self-deviation gap.
  const WorstCaseKernel kernel(p, gs);
  const auto wc = worst_case_f(p, fsim, shared_init(p.m0), 16, gs, 0, 0, 1, std::nullopt, &kernel);
  o.check(wc.hessian_definite && wc.grad_norm <= 1e-8 * wc.grad_scale,
          fmt("worst-case stationarity, gradient %.2e", wc.grad_norm));
  DeviationFamilyOptions fam;
  fam.pilot_best_response = false;
  fam.random_count = 0;
  const auto ng = nash_gap_experiment(p, fsim, shared_init(p.m0), 16, gs, fam, 1, 1, &kernel);
  o.check(ng.rows.front().name == "self" && ng.rows.front().gap == 0.0, "self-deviation gap is 0");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  int criterion = 0;
  app.add_option("--criterion", criterion, "criterion number 1-9, 0 runs all")
      ->check(CLI::Range(0, 9));
  CLI11_PARSE(app, argc, argv);

  const std::vector<std::function<void(Outcome&)>> all{criterion1, criterion2, criterion3,
                                                       criterion4, criterion5, criterion6,
                                                       criterion7, criterion8, criterion9};
  bool ok = true;
  for (int c = 1; c <= 9; ++c) {
    if (criterion != 0 && c != criterion) continue;
    Outcome o;
    try {
      all[c - 1](o);
    } catch (const std::exception& e) {
      o.check(false, std::string("unexpected error: ") + e.what());
    }
    std::cout << "criterion " << c << ": " << (o.pass ? "PASS" : "FAIL") << o.msg.str() << "\n";
    ok = ok && o.pass;
  }
  return ok ? 0 : 1;
}
