#pragma once

#include <cstdint>
#include <optional>

#include "rmfg/model.hpp"
#include "rmfg/simulator.hpp"
#include "rmfg/strategy.hpp"

namespace rmfg {

/// Quadratic part of the expected cost in a disturbance that is constant on each grid step.
/// A common f shifts every agent by the same z with z' = (A+G) z + f, so this part depends on
/// (A, G, Q, Gamma, H, gamma, grid) only and is shared by all strategy profiles.
class WorstCaseKernel {
 public:
  WorstCaseKernel(const ModelParams& p, const TimeGrid& grid);

  const TimeGrid& grid() const { return grid_; }
  /// Hessian of J in the step values f_0..f_{K-1} (stacked), i.e. 2 (M - dt/gamma I).
  const Matrix& hessian() const { return hessian_; }
  bool concave() const { return concave_; }
  /// Smallest eigenvalue of -hessian (computed only when the Cholesky test fails, else NaN).
  double min_eigenvalue_of_negated() const { return min_eig_; }

  /// Linear coefficient b for mean tracking error e0 (per knot) and terminal mean xT.
  Vector linear_term(const ModelParams& p, const std::vector<Vector>& e0, const Vector& xT) const;
  /// Maximizer of b^T f + f^T (hessian / 2) f; requires concave().
  Vector maximize(const Vector& b) const;

 private:
  TimeGrid grid_;
  Eigen::Index n_;
  Matrix E_, F_;
  Matrix hessian_;
  Eigen::LLT<Matrix> llt_;
  bool concave_ = false;
  double min_eig_;
};

/// Exact mean and covariance moments of agent `agent` and the average of the others in the
/// N-agent game under f = 0, integrated with RK4.
struct AgentMoments {
  std::vector<Vector> e_mean;   // x_a - Gamma x^(N) - eta
  std::vector<Vector> u_mean;
  std::vector<double> e_var;    // tr(Q Cov e)
  std::vector<double> u_var;    // tr(R Cov u)
  Vector xT_mean;
  double xT_var = 0.0;          // tr(H Cov x_a(T))
  double J0 = 0.0;              // expected cost at f = 0
};

AgentMoments agent_moments(const ModelParams& p, const StrategyField& field, const InitSpec& init,
                           std::size_t N, const TimeGrid& grid, std::size_t agent,
                           const std::optional<AffineLaw>& law = std::nullopt);

struct WorstCaseResult {
  Trajectory f_star = Trajectory::constant(TimeGrid(1.0, 2), Vector::Zero(1));  // f_i at knot i
  Vector f_steps;              // stacked step values
  double J_wo = 0.0;
  double J0 = 0.0;
  bool hessian_definite = false;
  double min_eigenvalue = 0.0; // of the negated Hessian when not definite
  double grad_norm = 0.0;
  double grad_scale = 1.0;
  std::optional<double> mc_J_wo;  // Monte Carlo cross-check (evaluate_cost under f_star)
  std::optional<double> mc_se;
};

/// Worst-case disturbance for `agent` with its law overridden by `law` if given.
/// `replications` > 0 adds a Monte Carlo estimate of the worst-case cost.
WorstCaseResult worst_case_f(const ModelParams& p, const StrategyField& field, const InitSpec& init,
                             std::size_t N, const TimeGrid& grid, std::size_t agent,
                             int replications, std::uint64_t seed,
                             const std::optional<AffineLaw>& law = std::nullopt,
                             const WorstCaseKernel* kernel = nullptr);

/// Stationarity residual |grad J(f)| of the discrete functional at step values f.
double worst_case_gradient(const WorstCaseKernel& kernel, const Vector& b, const Vector& f);

}  // namespace rmfg
