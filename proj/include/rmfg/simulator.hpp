#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rmfg/model.hpp"
#include "rmfg/strategy.hpp"

namespace rmfg {

/// Open-loop law u(t) = L(t) xi(t) + l(t) on the agent's reference state xi.
struct AffineLaw {
  Trajectory L;  // n1 x n
  Trajectory l;  // n1
};

/// The equilibrium law of a feedback strategy: L = -R^{-1} B^T P, l = R^{-1} B^T phi.
AffineLaw equilibrium_law(const ModelParams& p, const FeedbackStrategy& fs);

/// Each agent carries a reference state driven by the limit model,
///   dxi = (A xi + B u + G mbar + gamma pbar) dt + D dW,
/// and its control is the law evaluated on xi, so the control process does not react to the
/// realized disturbance. The physical state follows the coupled dynamics
///   dx = (A x + B u + G x^(N) + f) dt + D dW
/// with the same Brownian increments. Both are advanced by Euler-Maruyama.
struct SimulationOptions {
  std::uint32_t replication = 0;
  std::optional<AffineLaw> deviation;  // law of agent `deviation_agent` if set
  std::size_t deviation_agent = 0;
  bool references_only = false;        // skip the physical population
  bool keep_paths = true;
};

struct PopulationRun {
  std::size_t N = 0;
  std::uint64_t seed = 0;
  std::uint32_t replication = 0;
  TimeGrid grid{1.0, 2};
  std::vector<Matrix> paths;       // n x knots per agent (empty if not kept or references_only)
  std::vector<Matrix> references;  // n x knots per agent (empty if not kept)
  std::vector<Matrix> controls;    // n1 x knots per agent (empty if not kept)
  Trajectory f_used = Trajectory::constant(TimeGrid(1.0, 2), Vector::Zero(1));
  Trajectory x_avg = f_used;       // x^(N)
  Trajectory u_avg = f_used;       // u^(N)
  Trajectory ref_avg = f_used;     // mean of reference states

  Trajectory path(std::size_t agent) const;
  Trajectory control(std::size_t agent) const;
};

/// Throws EscapeTimeError (knot = agent index encoded in the message) on non-finite paths.
PopulationRun simulate_population(const ModelParams& p, const StrategyField& field,
                                  const InitSpec& init, const Trajectory& f, std::size_t N,
                                  std::uint64_t seed, const TimeGrid& grid,
                                  const SimulationOptions& opts = {});

/// Initial state of an agent for a replication (random mode draws from the noise source).
Vector initial_state(const InitSpec& init, const ModelParams& p, std::size_t agent,
                     std::uint64_t seed, std::uint32_t replication);

struct CostBreakdown {
  double tracking = 0.0;
  double effort = 0.0;
  double disturbance_credit = 0.0;
  double terminal = 0.0;
  double total = 0.0;
};

/// Trapezoid quadrature of agent i's cost along the realized path.
CostBreakdown evaluate_cost(const PopulationRun& run, const ModelParams& p, std::size_t agent,
                            const Trajectory& f);

}  // namespace rmfg
