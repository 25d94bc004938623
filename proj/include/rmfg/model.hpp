#pragma once

#include <optional>
#include <vector>

#include "rmfg/errors.hpp"
#include "rmfg/numkit.hpp"

namespace rmfg {

/// Parameter datum shared by all agents. All coefficients are constant in time.
struct ModelParams {
  Matrix A;      // n x n
  Matrix B;      // n x n1
  Matrix G;      // n x n
  Matrix D;      // n x n2
  Matrix Gamma;  // n x n
  Vector eta;    // n
  Matrix Q;      // n x n, symmetric PSD
  Matrix R;      // n1 x n1, symmetric PD
  double gamma = 1.0;
  Matrix H;      // n x n, symmetric PSD
  double T = 1.0;
  Vector m0;     // n
};

struct DerivedDims {
  Eigen::Index n = 0;
  Eigen::Index n1 = 0;
  Eigen::Index n2 = 0;
  Matrix Qhat;  // (I - Gamma)^T Q (I - Gamma)
};

/// Checks every invariant and reports all violations at once (InvalidModelError).
DerivedDims validate(const ModelParams& p);

/// Same checks without throwing.
std::vector<Violation> violations(const ModelParams& p);

/// Frequently used products.
Matrix qhat(const ModelParams& p);
Matrix control_gain(const ModelParams& p);  // S = B R^{-1} B^T
Matrix rinv_bt(const ModelParams& p);       // R^{-1} B^T

enum class InitMode { Shared, Deterministic, Random };

/// Initial states of the population.
struct InitSpec {
  InitMode mode = InitMode::Shared;
  std::optional<Vector> shared;      // Shared: common value (defaults to m0)
  std::vector<Vector> points;        // Deterministic: one per agent
  std::vector<Vector> means;         // Random: cycled over agents
  std::vector<Matrix> covariances;   // Random: cycled over agents

  /// Expected initial state of agent i.
  Vector mean(std::size_t agent, const ModelParams& p) const;
  /// Initial covariance of agent i (zero unless Random).
  Matrix covariance(std::size_t agent, const ModelParams& p) const;
};

/// Checks the initial specification against N agents of state dimension n; throws InvalidModelError.
void validate_init(const InitSpec& init, std::size_t N, Eigen::Index n);

InitSpec shared_init(const Vector& value);

struct SolverSettings {
  int n_steps = 2000;
  int h2_basis = 32;
  double fp_tol = 1e-10;
  int fp_max_iter = 200;
};

}  // namespace rmfg
