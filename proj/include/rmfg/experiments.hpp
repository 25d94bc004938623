#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "rmfg/simulator.hpp"
#include "rmfg/strategy.hpp"
#include "rmfg/worst_case.hpp"

namespace rmfg {

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;  // propagated from the per-point standard errors
  double ci_lo = 0.0;     // slope +- 1.96 slope_se
  double ci_hi = 0.0;
};

/// Least-squares line through (log x, log y). Needs at least 3 points with y > 0.
LogLogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y,
                     const std::vector<double>& y_se);

struct ConvergenceReport {
  std::vector<std::size_t> N_list;
  std::vector<double> stat;       // sup_t E|u^(N) - u*|^2
  std::vector<double> stat_se;
  std::vector<double> predicted;  // sup_t (|mean offset|^2 + tr(Var)/N), from the Lyapunov equation
  LogLogFit fit;
  bool fit_valid = false;
  double initial_offset = 0.0;    // |average initial mean - m0|
  int replications = 0;
  std::uint64_t seed = 0;
};

ConvergenceReport convergence_experiment(const ModelParams& p, const StrategyField& field,
                                         const InitSpec& init, const TimeGrid& grid,
                                         const std::vector<std::size_t>& N_list, int replications,
                                         std::uint64_t seed);

struct Deviation {
  std::string name;
  AffineLaw law;
};

struct DeviationFamilyOptions {
  bool pilot_best_response = true;
  std::vector<double> scales{0.05, 0.2};
  int random_count = 8;
  double random_size = 0.1;  // relative size of the perturbation of (P, phi)
  bool include_self = true;
};

/// Deterministic members of the family: self, (1 +- delta) scaled, random perturbations.
std::vector<Deviation> deviation_family(const ModelParams& p, const FeedbackStrategy& fs,
                                        const DeviationFamilyOptions& opts, std::uint64_t seed);

/// Best response of the limit problem against a realized mean-field path xN:
/// same P, phi solved with xN in place of the mean field.
AffineLaw pilot_best_response(const ModelParams& p, const FeedbackStrategy& fs, const Trajectory& xN,
                              const TimeGrid& grid);

struct NashGapRow {
  std::string name;
  double J_wo = 0.0;
  double gap = 0.0;
  double gap_se = 0.0;
  bool concave = true;
};

struct NashGapReport {
  std::size_t N = 0;
  double J_eq = 0.0;
  std::vector<NashGapRow> rows;
  double eps_hat = 0.0;
  double eps_se = 0.0;
  std::vector<double> eps_per_replication;
  std::vector<std::string> warnings;
  int replications = 0;
  std::uint64_t seed = 0;
};

/// Agent 0 deviates. gap(u) = J^wo(equilibrium) - J^wo(u); eps = max(0, max gap), averaged over
/// replications (only the pilot best response depends on the replication).
NashGapReport nash_gap_experiment(const ModelParams& p, const StrategyField& field,
                                  const InitSpec& init, std::size_t N, const TimeGrid& grid,
                                  const DeviationFamilyOptions& family, int replications,
                                  std::uint64_t seed, const WorstCaseKernel* kernel = nullptr);

struct SubspaceBestResponse {
  AffineLaw law;
  double gain = 0.0;  // J^wo(equilibrium) - J^wo(law), >= 0 up to roundoff
  int dimension = 0;
  bool convex = true; // Hessian of J^wo in the shift coefficients was positive definite
};

/// Exact best response of agent 0 among laws whose offset l is shifted by a function that is
/// piecewise constant on `pieces` equal intervals. J^wo is quadratic in the shift coefficients,
/// so its gradient and Hessian are recovered exactly by central differences.
SubspaceBestResponse subspace_best_response(const ModelParams& p, const StrategyField& field,
                                            const InitSpec& init, std::size_t N,
                                            const TimeGrid& grid, int pieces,
                                            const WorstCaseKernel* kernel = nullptr);

struct RandomModeReport {
  ConvergenceReport convergence;
  double mean_offset = 0.0;  // |(1/N) sum E xi_j - m0| for the largest N
};

/// Convergence pipeline for random initial states; requires init.mode == Random.
RandomModeReport random_initial_mode(const ModelParams& p, const StrategyField& field,
                                     const InitSpec& init, const TimeGrid& grid,
                                     const std::vector<std::size_t>& N_list, int replications,
                                     std::uint64_t seed);

nlohmann::json to_json(const ConvergenceReport& r);
nlohmann::json to_json(const NashGapReport& r);

}  // namespace rmfg
