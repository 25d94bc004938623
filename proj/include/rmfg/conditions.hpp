#pragma once

#include <optional>
#include <vector>

#include <json.hpp>

#include "rmfg/model.hpp"
#include "rmfg/riccati.hpp"

namespace rmfg {

/// det of the lower-right n x n block of e^{h1_matrix(p) t}.
double h1_block_det(const ModelParams& p, double t);

struct H1DeterminantResult {
  bool verdict = false;
  double margin = 0.0;         // min over knots
  double argmin_time = 0.0;
  std::vector<double> dets;    // one per knot
};

/// Verdict true iff the block determinant stays above 1e-10 on every knot.
H1DeterminantResult check_h1_determinant(const ModelParams& p, const TimeGrid& grid);

/// True iff the indefinite Riccati equation for P has no finite escape on the grid.
bool check_h1_riccati(const ModelParams& p, const TimeGrid& grid);

/// Gram matrix of the coercivity form on the L2-orthonormal piecewise-constant basis with
/// basis_size intervals per control component. Index j = interval * n1 + component.
/// The perturbation system is integrated on the finest grid refining both `grid` and the basis.
/// Throws H1ViolatedError when the terminal shooting matrix for q(0) is singular.
Matrix assemble_h2_form(const ModelParams& p, const TimeGrid& grid, int basis_size);

/// Value of the coercivity form for a control piecewise constant on the steps of `grid`
/// (nu(k) is the value on step k), integrated with the same rule as assemble_h2_form.
double h2_form_value(const ModelParams& p, const TimeGrid& grid,
                     const std::function<Vector(std::size_t)>& nu);

struct H2Result {
  bool verdict = false;
  double delta0 = 0.0;          // at basis_size
  double delta0_doubled = 0.0;  // at 2 * basis_size
  int basis_size = 0;
};

/// delta0 = smallest eigenvalue of the Gram matrix (orthonormal basis, so the mass matrix is I).
/// Verdict requires delta0 > 1e-8 at both basis_size and 2 * basis_size.
H2Result check_h2(const ModelParams& p, const TimeGrid& grid, int basis_size);

struct CqBound {
  double b1 = 0, b2 = 0, b3 = 0, b4 = 0, b5 = 0;
  double Cq = 0;
  double margin = 0;  // smallest eigenvalue of R - gamma Cq I
  bool verdict = false;
};

/// Sufficient coercivity bound, H = 0 only (NotApplicableError otherwise).
CqBound compute_Cq_bound(const ModelParams& p, const TimeGrid& grid);

struct ContractionResult {
  double c1 = 0, c2 = 0, c3 = 0, c4 = 0;
  double lhs = 0;
  bool verdict = false;
};

/// Sufficient contraction condition for the consistency fixed point, H = 0 only.
ContractionResult check_contraction(const ModelParams& p, const RiccatiSolution& K,
                                    const TimeGrid& grid);

struct BvpSolvability {
  double det = 0;
  double scale = 1;  // Hadamard bound prod_i |row_i(C Theta(T))|; verdict needs |det| > 1e-10 scale
  bool verdict = false;
};

BvpSolvability check_bvp_solvability(const ModelParams& p);

struct ConditionsReport {
  H1DeterminantResult h1;
  bool h1_riccati = false;
  std::optional<double> h1_escape_time;
  H2Result h2;
  std::optional<CqBound> cq;            // absent when H != 0
  std::optional<ContractionResult> contraction;  // absent when H != 0 or (H1) fails
  BvpSolvability bvp;
  std::vector<std::string> notes;

  /// (H1) by both methods, (H2) and BVP solvability. The contraction and C_q verdicts are
  /// sufficient conditions and are reported but not required.
  bool all_required() const;
};

ConditionsReport check_all(const ModelParams& p, const SolverSettings& s);

nlohmann::json to_json(const ConditionsReport& r);

}  // namespace rmfg
