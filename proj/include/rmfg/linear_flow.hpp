#pragma once

// Exact propagation of linear constant-coefficient systems w' = M w + c_k with forcing held
// constant on each grid step, and a shooting solver for their two-point boundary problems.

#include <functional>

#include "rmfg/numkit.hpp"

namespace rmfg {

/// E = e^{M dt} and F = \int_0^dt e^{M s} ds, from one augmented exponential.
struct StepMaps {
  Matrix E;
  Matrix F;
};
StepMaps step_maps(const Matrix& m, double dt);

/// Forcing on step k (constant on [t_k, t_{k+1})). An empty function means zero forcing.
using StepForcing = std::function<Vector(std::size_t)>;

/// Propagates w(0) = init on the grid with the step maps.
Trajectory propagate(const StepMaps& maps, const StepForcing& forcing, const Vector& init,
                     const TimeGrid& grid);

/// w(0) = base + U mu with mu unknown, and terminal constraint C w(T) = r.
struct LinearBvp {
  Matrix M;
  StepForcing forcing;
  Vector base;
  Matrix U;
  Matrix C;
  Vector r;
};

struct LinearBvpSolution {
  Trajectory w;
  Vector unknowns;
  /// |det S| / (prod_i |row_i(C e^{MT})| |U|_2^k) for the shooting matrix S = C e^{MT} U.
  double normalized_det;
};

/// Throws BvpUnsolvableError if the normalized shooting determinant is at most 1e-10.
LinearBvpSolution solve_linear_bvp(const LinearBvp& bvp, const TimeGrid& grid);

/// Rows [offset, offset+len) of every knot value.
Trajectory block_rows(const Trajectory& w, Eigen::Index offset, Eigen::Index len);

/// Stacks column-vector trajectories on the same grid.
Trajectory stack(const std::vector<const Trajectory*>& parts);

/// |det S| / prod_i |row_i(S)|, 0 for an empty product.
double hadamard_ratio(const Matrix& s);

/// Upper bound prod_i |row_i(C Phi)| * |U|_2^k on |det(C Phi U)| (Hadamard).
double shooting_bound(const Matrix& c_phi, const Matrix& u);

/// |det(C Phi U)| / shooting_bound, in [0, 1]. Unlike hadamard_ratio of C Phi U it detects
/// singular 1 x 1 shooting matrices.
double shooting_ratio(const Matrix& c_phi, const Matrix& u);

}  // namespace rmfg
