#pragma once

#include <string>
#include <vector>

#include "rmfg/model.hpp"
#include "rmfg/riccati.hpp"

namespace rmfg {

enum class ConsistencyMethod { Shooting, FixedPoint };

struct ConsistencySolution {
  Trajectory m;
  Trajectory p;
  Trajectory y;
  Trajectory u_bar;  // R^{-1} B^T y
  ConsistencyMethod method;
  double residual = 0.0;          // relative central-difference residual of the (m, p, y) system
  double boundary_error = 0.0;    // max of |m(0)-m0|, |p(T)-Hm(T)|, |y(T)+Hm(T)| over (1 + sup|w|)
  int iterations = 0;             // fixed point only
  std::vector<double> increments; // fixed point only, sup-norm change of h per sweep
};

/// Variation-of-constants shooting for the unknowns p(0), y(0), then exact propagation.
/// Throws BvpUnsolvableError when the terminal matrix is singular and AccuracyError when the
/// residual exceeds 1e-6 or a boundary condition misses by more than 1e-8.
ConsistencySolution solve_bvp_shooting(const ModelParams& p, const TimeGrid& grid);

/// Iterates h <- B R^{-1} B^T y[h] from h = 0 through the decoupling p = -K m + phi.
/// Throws NonConvergenceError after max_iter sweeps.
ConsistencySolution fixed_point_iterate(const ModelParams& p, const RiccatiSolution& K,
                                        const TimeGrid& grid, double tol = 1e-10,
                                        int max_iter = 200);

/// Largest ratio of consecutive fixed-point increments, ignoring those below `floor`.
double observed_ratio(const ConsistencySolution& s, double floor = 1e-12);

struct EquivalenceReport {
  double x_minus_m = 0.0;  // sup |xbar - mbar| of the lifted 4-component system
  double m_gap = 0.0;      // sup |mbar - m|
  double p_gap = 0.0;
  double y_gap = 0.0;
  double scale = 1.0;      // 1 + sup of |m|, |p|, |y|; gaps are compared with 1e-7 * scale
  bool passed = false;
};

/// Solves the lifted system in (xbar, mbar, pbar, ybar) with xbar(0) = mbar(0) = m0,
/// pbar(T) = H mbar(T), ybar(T) = -H xbar(T), independently of `sol`, and compares.
/// Throws EquivalenceViolation when any gap exceeds 1e-7 relative to the solution size.
EquivalenceReport validate_equivalences(const ConsistencySolution& sol, const ModelParams& p,
                                        const TimeGrid& grid);

/// Relative residual of the (m, p, y) system on a stacked trajectory.
double consistency_residual(const ModelParams& p, const Trajectory& m, const Trajectory& pp,
                            const Trajectory& y);

}  // namespace rmfg
