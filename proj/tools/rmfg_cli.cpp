// Command-line front end: check, solve, simulate, convergence, nash-gap.
// Exit codes: 0 success, 2 a condition check failed, 1 any error.

#include <CLI11.hpp>

#include <chrono>
#include <iostream>
#include <sstream>

#include "rmfg/conditions.hpp"
#include "rmfg/config.hpp"
#include "rmfg/consistency.hpp"
#include "rmfg/errors.hpp"
#include "rmfg/experiments.hpp"
#include "rmfg/parallel.hpp"
#include "rmfg/report.hpp"
#include "rmfg/simulator.hpp"
#include "rmfg/strategy.hpp"

namespace fs = std::filesystem;
using namespace rmfg;

namespace {

struct Globals {
  std::string config;
  std::string out_dir = "out";
  unsigned threads = 0;
  std::uint64_t seed = 1;
  int steps = 0;
};

struct SimFlags {
  std::size_t N = 64;
  std::vector<std::size_t> N_list{8, 32, 128, 512};
  int replications = 16;
  std::size_t agent = 0;
  std::string deviations = "self,scaled,random,pilot";
};

TimeGrid grid_for(const Config& c, const Globals& g) {
  return TimeGrid(c.params.T, g.steps > 0 ? g.steps : c.solver.n_steps);
}

class Runner {
 public:
  Runner(const Globals& g, std::string sub) : g_(g), sub_(std::move(sub)), start_(std::chrono::steady_clock::now()) {
    cfg_ = load_config(g.config);
    validate(cfg_.params);
    set_thread_count(g.threads);
    fs::create_directories(g.out_dir);
  }
  const Config& cfg() const { return cfg_; }
  fs::path out(const std::string& name) {
    outputs_.push_back(name);
    return fs::path(g_.out_dir) / name;
  }
  void finish(nlohmann::json settings) {
    RunManifest m;
    m.config_path = g_.config;
    m.subcommand = sub_;
    settings["seed"] = g_.seed;
    settings["threads"] = g_.threads;
    settings["steps"] = g_.steps;
    settings["config"] = to_json(cfg_);
    m.settings = settings;
    m.tool_version = tool_version();
    m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    m.outputs = outputs_;
    write_json(fs::path(g_.out_dir) / "manifest.json", m.to_json());
  }

 private:
  Globals g_;
  std::string sub_;
  std::chrono::steady_clock::time_point start_;
  Config cfg_;
  std::vector<std::string> outputs_;
};

int run_check(const Globals& g) {
  Runner r(g, "check");
  SolverSettings s = r.cfg().solver;
  if (g.steps > 0) s.n_steps = g.steps;
  const auto report = check_all(r.cfg().params, s);
  write_json(r.out("conditions.json"), to_json(report));
  std::cout << "(H1) determinant: " << (report.h1.verdict ? "true" : "false") << " (margin " << report.h1.margin << ")\n"
            << "(H1) Riccati:     " << (report.h1_riccati ? "true" : "false") << "\n"
            << "(H2) Galerkin:    " << (report.h2.verdict ? "true" : "false") << " (delta0 " << report.h2.delta0 << ")\n";
  if (report.cq) std::cout << "C_q bound:        " << (report.cq->verdict ? "true" : "false") << " (C_q " << report.cq->Cq << ")\n";
  if (report.contraction) {
    std::cout << "contraction:      " << (report.contraction->verdict ? "true" : "false") << " (lhs " << report.contraction->lhs
              << ", c1 " << report.contraction->c1 << ")\n";
  }
  std::cout << "BVP solvability:  " << (report.bvp.verdict ? "true" : "false") << " (det " << report.bvp.det << ")\n";
  for (const auto& n : report.notes) std::cout << "note: " << n << "\n";
  r.finish({});
  return report.all_required() ? 0 : 2;
}

int run_solve(const Globals& g) {
  Runner r(g, "solve");
  const auto& p = r.cfg().params;
  const TimeGrid grid = grid_for(r.cfg(), g);
  const auto cs = solve_bvp_shooting(p, grid);
  nlohmann::json summary{{"method", "shooting"}, {"residual", cs.residual}, {"boundary_error", cs.boundary_error}};
  if (p.H.norm() == 0.0) {
    try {
      const auto K = solve_indefinite_K(p, grid);
      const auto c = check_contraction(p, K, grid);
      summary["contraction_lhs"] = c.lhs;
      if (c.verdict) {
        const auto fp = fixed_point_iterate(p, K, grid, r.cfg().solver.fp_tol, r.cfg().solver.fp_max_iter);
        summary["fixed_point"] = {{"iterations", fp.iterations},
                                  {"observed_ratio", observed_ratio(fp)},
                                  {"sup_gap_m", sup_distance(fp.m, cs.m)},
                                  {"sup_gap_p", sup_distance(fp.p, cs.p)},
                                  {"sup_gap_y", sup_distance(fp.y, cs.y)}};
      }
    } catch (const Error& e) {
      summary["fixed_point_note"] = e.what();
    }
  }
  const auto eq = validate_equivalences(cs, p, grid);
  summary["equivalence"] = {{"x_minus_m", eq.x_minus_m}, {"m_gap", eq.m_gap}, {"p_gap", eq.p_gap}, {"y_gap", eq.y_gap}};
  const StrategyField field(p, cs, grid);
  const auto& st = field.base();
  summary["reconstruction_error"] = reconstruction_error(st);
  const auto lc = limit_cost(p, st.limit, st, grid, true);
  summary["limit_cost"] = {{"mean", lc.mean_part}, {"fluctuation", lc.fluctuation_part}, {"total", lc.total}};
  write_trajectory_csv(r.out("solution.csv"), grid,
                       {{"m", &cs.m}, {"p", &cs.p}, {"y", &cs.y}, {"u_bar", &cs.u_bar}, {"P", &st.P.P},
                        {"phi", &st.phi}, {"f_hat", &st.f_hat}});
  write_json(r.out("solve.json"), summary);
  std::cout << "solved consistency system by shooting: residual " << cs.residual << ", boundary error "
            << cs.boundary_error << "\nlimit cost " << lc.total << "\n";
  r.finish({});
  return 0;
}

int run_simulate(const Globals& g, const SimFlags& f) {
  Runner r(g, "simulate");
  const auto& p = r.cfg().params;
  const TimeGrid grid = grid_for(r.cfg(), g);
  const auto field = synthesize(p, grid);
  const auto fs0 = field.at(r.cfg().init.mean(f.agent, p));
  const auto run = simulate_population(p, field, r.cfg().init, field.base().f_hat, f.N, g.seed, grid);
  const auto path = run.path(f.agent);
  const auto ctrl = run.control(f.agent);
  write_trajectory_csv(r.out("paths.csv"), grid,
                       {{"x_avg", &run.x_avg}, {"u_avg", &run.u_avg}, {"x_agent", &path}, {"u_agent", &ctrl},
                        {"f", &run.f_used}});
  const auto c = evaluate_cost(run, p, f.agent, run.f_used);
  const auto lc = limit_cost(p, fs0.limit, fs0, grid, true);
  write_json(r.out("cost.json"), {{"agent", f.agent},
                                  {"tracking", c.tracking},
                                  {"effort", c.effort},
                                  {"disturbance_credit", c.disturbance_credit},
                                  {"terminal", c.terminal},
                                  {"total", c.total},
                                  {"limit_cost", lc.total}});
  std::cout << "simulated N=" << f.N << ", agent " << f.agent << " cost " << c.total << " (limit " << lc.total << ")\n";
  r.finish({{"N", f.N}, {"agent", f.agent}});
  return 0;
}

int run_convergence(const Globals& g, const SimFlags& f) {
  Runner r(g, "convergence");
  const auto& p = r.cfg().params;
  const TimeGrid grid = grid_for(r.cfg(), g);
  const auto field = synthesize(p, grid);
  const auto rep = convergence_experiment(p, field, r.cfg().init, grid, f.N_list, f.replications, g.seed);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < rep.N_list.size(); ++i) {
    rows.push_back({static_cast<double>(rep.N_list[i]), rep.stat[i], rep.stat_se[i], rep.predicted[i]});
  }
  write_table_csv(r.out("convergence.csv"), {"N", "stat", "stat_se", "predicted"}, rows);
  write_json(r.out("convergence.json"), to_json(rep));
  for (const auto& row : rows) std::cout << "N=" << row[0] << " stat=" << row[1] << " +- " << row[2] << " predicted " << row[3] << "\n";
  if (rep.fit_valid) std::cout << "slope " << rep.fit.slope << " [" << rep.fit.ci_lo << ", " << rep.fit.ci_hi << "]\n";
  r.finish({{"N_list", f.N_list}, {"replications", f.replications}});
  return 0;
}

int run_nash(const Globals& g, const SimFlags& f) {
  Runner r(g, "nash-gap");
  const auto& p = r.cfg().params;
  const TimeGrid grid = grid_for(r.cfg(), g);
  const auto field = synthesize(p, grid);
  DeviationFamilyOptions fam;
  std::stringstream ss(f.deviations);
  std::string item;
  fam.include_self = fam.pilot_best_response = false;
  std::vector<double> scales;
  int random_count = 0;
  while (std::getline(ss, item, ',')) {
    if (item == "self") fam.include_self = true;
    else if (item == "scaled") scales = {0.05, 0.2};
    else if (item == "random") random_count = 8;
    else if (item == "pilot") fam.pilot_best_response = true;
    else throw ConfigError("unknown deviation kind '" + item + "'");
  }
  fam.scales = scales;
  fam.random_count = random_count;
  const auto rep = nash_gap_experiment(p, field, r.cfg().init, f.N, grid, fam, f.replications, g.seed);
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    rows.push_back({static_cast<double>(i), rep.rows[i].J_wo, rep.rows[i].gap, rep.rows[i].gap_se});
  }
  write_table_csv(r.out("nash_gap.csv"), {"deviation", "J_wo", "gap", "gap_se"}, rows);
  write_json(r.out("nash_gap.json"), to_json(rep));
  std::cout << "N=" << rep.N << " J_eq=" << rep.J_eq << " eps_hat=" << rep.eps_hat << " +- " << rep.eps_se << "\n";
  for (const auto& row : rep.rows) std::cout << "  " << row.name << ": gap " << row.gap << "\n";
  for (const auto& w : rep.warnings) std::cout << "warning: " << w << "\n";
  r.finish({{"N", f.N}, {"replications", f.replications}, {"deviations", f.deviations}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust mean-field LQG game solver"};
  app.require_subcommand(1);
  Globals g;
  SimFlags f;
  auto add_globals = [&](CLI::App* sub) {
    sub->add_option("--config", g.config, "JSON configuration")->required();
    sub->add_option("--out-dir", g.out_dir, "Output directory");
    sub->add_option("--threads", g.threads, "Worker threads (0 = all cores)");
    sub->add_option("--seed", g.seed, "Random seed");
    sub->add_option("--steps", g.steps, "Grid steps (overrides solver.n_steps)");
  };
  auto* check = app.add_subcommand("check", "Evaluate the solvability conditions");
  auto* solve = app.add_subcommand("solve", "Solve the consistency system and the strategy");
  auto* sim = app.add_subcommand("simulate", "Simulate one population run");
  auto* conv = app.add_subcommand("convergence", "Mean-field convergence experiment");
  auto* nash = app.add_subcommand("nash-gap", "Robust epsilon-Nash gap experiment");
  for (auto* s : {check, solve, sim, conv, nash}) add_globals(s);
  sim->add_option("--N", f.N, "Number of agents");
  sim->add_option("--agent", f.agent, "Agent whose cost is reported");
  conv->add_option("--N-list", f.N_list, "Population sizes")->delimiter(',');
  conv->add_option("--replications", f.replications, "Replications per N");
  nash->add_option("--N", f.N, "Number of agents");
  nash->add_option("--replications", f.replications, "Pilot replications");
  nash->add_option("--deviations", f.deviations, "Comma list of self,scaled,random,pilot");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  try {
    if (*check) return run_check(g);
    if (*solve) return run_solve(g);
    if (*sim) return run_simulate(g, f);
    if (*conv) return run_convergence(g, f);
    if (*nash) return run_nash(g, f);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
