#pragma once

#include <map>
#include <optional>
#include <vector>

#include "rmfg/consistency.hpp"
#include "rmfg/model.hpp"
#include "rmfg/riccati.hpp"

namespace rmfg {

/// Expected state, mean field, adjoint and costate of one agent in the limit problem.
struct AgentLimitSystem {
  Trajectory x_bar;
  Trajectory m_bar;
  Trajectory p_bar;
  Trajectory y_bar;
  Trajectory u_bar_star;  // mean-field control R^{-1} B^T y of the consistency solution
};

/// Solves the two-point problem in (xbar, mbar, pbar, ybar) with the consistency control fixed.
/// The consistency triple is carried along as extra states from its t = 0 values so the
/// frozen control is represented exactly.
AgentLimitSystem solve_agent_limit(const ModelParams& p, const ConsistencySolution& cs,
                                   const Vector& x0_mean, const TimeGrid& grid);

struct FeedbackStrategy {
  RiccatiSolution P;      // standard Riccati, P(T) = H
  Trajectory phi;         // phi(T) = 0
  Trajectory u_bar_star;
  Trajectory f_hat;       // gamma * pbar
  AgentLimitSystem limit;

  /// R^{-1} B^T (-P(t_k) x + phi(t_k)).
  Vector control(const ModelParams& p, std::size_t k, const Vector& x) const;
};

/// Decoupling y = -P x + phi. Throws AccuracyError when -P xbar + phi misses ybar by > 1e-5.
FeedbackStrategy build_feedback(const ModelParams& p, const AgentLimitSystem& als,
                                const TimeGrid& grid);
FeedbackStrategy build_feedback(const ModelParams& p, const AgentLimitSystem& als,
                                const RiccatiSolution& P, const TimeGrid& grid);

/// Max over knots of |-P xbar + phi - ybar|.
double reconstruction_error(const FeedbackStrategy& fs);

struct LimitCost {
  double mean_part = 0.0;
  double fluctuation_part = 0.0;
  double total = 0.0;
};

/// Limit cost of one agent using the strategy. The control is the open-loop process generated
/// by the feedback on the agent's limit state, so a disturbance f different from fhat shifts the
/// agent state and the mean field by z with z' = (A+G) z + f - fhat while the control stays put.
/// Fluctuations come from the closed-loop Lyapunov equation started at sigma0 (zero if absent)
/// and include the control-fluctuation term tr(P S P Sigma).
LimitCost limit_cost(const ModelParams& p, const AgentLimitSystem& als, const FeedbackStrategy& fs,
                     const TimeGrid& grid, bool noise_variance_term,
                     const std::optional<Trajectory>& f = std::nullopt,
                     const std::optional<Matrix>& sigma0 = std::nullopt);

/// Strategies for every initial mean, exploiting that (xbar, mbar, pbar, ybar, phi) are affine
/// in the initial mean while P and the consistency solution are shared.
class StrategyField {
 public:
  StrategyField(const ModelParams& p, const ConsistencySolution& cs, const TimeGrid& grid);

  const FeedbackStrategy& base() const { return base_; }
  const ConsistencySolution& consistency() const { return cs_; }
  const TimeGrid& grid() const { return grid_; }

  FeedbackStrategy at(const Vector& x0_mean) const;

 private:
  ModelParams params_;
  ConsistencySolution cs_;
  TimeGrid grid_;
  FeedbackStrategy base_;
  std::vector<FeedbackStrategy> unit_;  // strategy at m0 + e_i minus base, per component
};

/// Consistency (shooting) plus strategy field in one call.
StrategyField synthesize(const ModelParams& p, const TimeGrid& grid);

}  // namespace rmfg
