#include "rmfg/riccati.hpp"

#include <cmath>
#include <limits>

#include "rmfg/errors.hpp"

namespace rmfg {

namespace {

void symmetrize(Matrix& m) { m = 0.5 * (m + m.transpose()).eval(); }

RiccatiSolution solve(const ModelParams& p, const TimeGrid& grid, RiccatiKind kind) {
  validate(p);
  const Matrix terminal = kind == RiccatiKind::Standard ? Matrix(p.H) : Matrix(-p.H);
  Rk4Options opts;
  opts.project = symmetrize;
  Trajectory traj = ode_rk4(riccati_field(p, kind), terminal, grid, Direction::Backward, opts);
  return {kind, std::move(traj), terminal};
}

}  // namespace

OdeField riccati_field(const ModelParams& p, RiccatiKind kind) {
  if (kind == RiccatiKind::Standard) {
    const Matrix A = p.A;
    const Matrix S = control_gain(p);
    const Matrix Q = p.Q;
    return [A, S, Q](double, const Matrix& P) -> Matrix {
      return -(A.transpose() * P + P * A - P * S * P + Q);
    };
  }
  const Matrix F = p.A + p.G;
  const Matrix Qh = qhat(p);
  const double g = p.gamma;
  return [F, Qh, g](double, const Matrix& P) -> Matrix {
    return -(F.transpose() * P + P * F - g * P * P - Qh);
  };
}

RiccatiSolution solve_indefinite_P(const ModelParams& p, const TimeGrid& grid) {
  return solve(p, grid, RiccatiKind::IndefiniteP);
}

RiccatiSolution solve_indefinite_K(const ModelParams& p, const TimeGrid& grid) {
  return solve(p, grid, RiccatiKind::IndefiniteK);
}

RiccatiSolution solve_standard_P(const ModelParams& p, const TimeGrid& grid) {
  try {
    return solve(p, grid, RiccatiKind::Standard);
  } catch (const EscapeTimeError& e) {
    throw Error(std::string("standard Riccati escaped, which cannot happen for valid data: ") + e.what());
  }
}

ScalarClosedForm scalar_closed_form(double Ahat, double Qhat, double gamma, double T) {
  const double disc = Ahat * Ahat - gamma * Qhat;
  if (!(disc > 0.0)) throw OscillatoryRegimeError("Ahat^2 - gamma Qhat <= 0: closed form not applicable");
  ScalarClosedForm c{};
  c.alpha = std::sqrt(disc);
  c.lambda1 = -Ahat + c.alpha;
  c.lambda2 = -Ahat - c.alpha;
  c.T = T;
  c.Qhat = Qhat;
  const double ratio = c.lambda2 / c.lambda1;
  if (Qhat == 0.0 || !(ratio > 1.0) || !std::isfinite(ratio)) {
    c.Tmax = std::numeric_limits<double>::infinity();
  } else {
    c.Tmax = std::log(ratio) / (2.0 * c.alpha);
  }
  return c;
}

double ScalarClosedForm::operator()(double t) const {
  if (Qhat == 0.0) return 0.0;
  const double ep = std::exp(alpha * (t - T));
  const double em = std::exp(-alpha * (t - T));
  return -Qhat * (ep - em) / (lambda2 * ep - lambda1 * em);
}

}  // namespace rmfg
