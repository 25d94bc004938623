#pragma once

#include <functional>

#include "rmfg/model.hpp"
#include "rmfg/numkit.hpp"

namespace rmfg {

enum class RiccatiKind { IndefiniteP, IndefiniteK, Standard };

struct RiccatiSolution {
  RiccatiKind kind;
  Trajectory P;
  Matrix terminal;
};

/// P' + (A+G)^T P + P(A+G) - gamma P^2 - Qhat = 0, P(T) = -H. Backward RK4 with
/// symmetrization; finite escape raises EscapeTimeError.
RiccatiSolution solve_indefinite_P(const ModelParams& p, const TimeGrid& grid);

/// The same equation under the name used by the consistency decoupling.
RiccatiSolution solve_indefinite_K(const ModelParams& p, const TimeGrid& grid);

/// P' + A^T P + P A - P B R^{-1} B^T P + Q = 0, P(T) = H.
RiccatiSolution solve_standard_P(const ModelParams& p, const TimeGrid& grid);

/// Right-hand side of the defining ODE, for residual checks.
OdeField riccati_field(const ModelParams& p, RiccatiKind kind);

/// Scalar indefinite equation with H = 0, written with Ahat = A + G.
struct ScalarClosedForm {
  double alpha;
  double lambda1;
  double lambda2;
  double Tmax;  // +infinity when there is no escape
  double T;
  double Qhat;
  double operator()(double t) const;
};

/// Throws OscillatoryRegimeError when Ahat^2 - gamma Qhat <= 0.
ScalarClosedForm scalar_closed_form(double Ahat, double Qhat, double gamma, double T);

}  // namespace rmfg
