#include "rmfg/conditions.hpp"

#include <cmath>
#include <limits>

#include "rmfg/blocks.hpp"
#include "rmfg/errors.hpp"
#include "rmfg/linear_flow.hpp"

namespace rmfg {

double h1_block_det(const ModelParams& p, double t) {
  const auto n = p.A.rows();
  return mat_exp(h1_matrix(p), t).bottomRightCorner(n, n).determinant();
}

H1DeterminantResult check_h1_determinant(const ModelParams& p, const TimeGrid& grid) {
  validate(p);
  H1DeterminantResult r;
  r.margin = std::numeric_limits<double>::infinity();
  const Matrix m = h1_matrix(p);
  const auto n = p.A.rows();
  r.dets.reserve(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double d = mat_exp(m, grid.knot(k)).bottomRightCorner(n, n).determinant();
    r.dets.push_back(d);
    if (d < r.margin) {
      r.margin = d;
      r.argmin_time = grid.knot(k);
    }
  }
  r.verdict = r.margin > 1e-10;
  return r;
}

bool check_h1_riccati(const ModelParams& p, const TimeGrid& grid) {
  try {
    solve_indefinite_P(p, grid);
    return true;
  } catch (const EscapeTimeError&) {
    return false;
  }
}

namespace {

struct H2Setup {
  TimeGrid fine;
  int steps_per_basis;
};

H2Setup h2_grid(const ModelParams& p, const TimeGrid& grid, int basis_size) {
  if (basis_size < 1) throw Error("basis_size must be positive");
  const int spb = std::max(2, (grid.n_steps() + basis_size - 1) / basis_size);
  return {TimeGrid(0.0, p.T, spb * basis_size), spb};
}

// Propagates the perturbation system for a control given per fine step and returns
// e = zcheck + (I - Gamma) z and q at every knot, stacked as (2n) x knots.
class PerturbationSolver {
 public:
  PerturbationSolver(const ModelParams& p, const TimeGrid& fine) : p_(p), fine_(fine) {
    n_ = p.A.rows();
    const Matrix m = perturbation_matrix(p);
    maps_ = step_maps(m, fine.dt());
    Matrix u = Matrix::Zero(3 * n_, n_);
    u.bottomRows(n_) = Matrix::Identity(n_, n_);
    c_ = Matrix::Zero(n_, 3 * n_);
    c_.block(0, 0, n_, n_) = -p.H;
    c_.block(0, n_, n_, n_) = -p.H;
    c_.block(0, 2 * n_, n_, n_) = Matrix::Identity(n_, n_);
    Matrix flow = Matrix::Identity(3 * n_, 3 * n_);
    for (int s = 0; s < fine.n_steps(); ++s) flow = maps_.E * flow;
    const Matrix c_phi = c_ * flow;
    const Matrix shoot = c_phi * u;
    if (!(shooting_ratio(c_phi, u) > 1e-10)) {
      throw H1ViolatedError("terminal matrix for q(0) is singular; (H1) fails");
    }
    lu_ = shoot.fullPivLu();
    u_ = u;
    ig_ = Matrix::Identity(n_, n_) - p.Gamma;
  }

  // Columns: knots. Rows: e (n) then q (n).
  Matrix response(const std::function<Vector(std::size_t)>& nu) const {
    auto forcing = [&](std::size_t k) -> Vector {
      Vector f = Vector::Zero(3 * n_);
      f.head(n_) = p_.B * nu(k);
      return f;
    };
    const Vector zero = Vector::Zero(3 * n_);
    const Vector wT = propagate(maps_, forcing, zero, fine_).back();
    const Vector q0 = lu_.solve(-c_ * wT);
    const Trajectory w = propagate(maps_, forcing, u_ * q0, fine_);
    Matrix out(2 * n_, static_cast<Eigen::Index>(w.size()));
    for (std::size_t k = 0; k < w.size(); ++k) {
      const auto& v = w[k];
      out.col(static_cast<Eigen::Index>(k)).head(n_) = v.topRows(n_) + ig_ * v.middleRows(n_, n_);
      out.col(static_cast<Eigen::Index>(k)).tail(n_) = v.bottomRows(n_);
    }
    return out;
  }

  // Quadratic form without the control-energy term, trapezoid in time.
  double bilinear(const Matrix& a, const Matrix& b) const {
    const double dt = fine_.dt();
    double s = 0.0;
    const auto last = a.cols() - 1;
    for (Eigen::Index k = 0; k <= last; ++k) {
      const double w = (k == 0 || k == last) ? 0.5 * dt : dt;
      s += w * (a.col(k).head(n_).dot(p_.Q * b.col(k).head(n_)) -
                p_.gamma * a.col(k).tail(n_).dot(b.col(k).tail(n_)));
    }
    s += a.col(last).head(n_).dot(p_.H * b.col(last).head(n_));
    return s;
  }

 private:
  const ModelParams& p_;
  TimeGrid fine_;
  Eigen::Index n_;
  StepMaps maps_;
  Matrix c_, u_, ig_;
  Eigen::FullPivLU<Matrix> lu_;
};

}  // namespace

Matrix assemble_h2_form(const ModelParams& p, const TimeGrid& grid, int basis_size) {
  validate(p);
  const auto [fine, spb] = h2_grid(p, grid, basis_size);
  const auto n1 = p.B.cols();
  const PerturbationSolver solver(p, fine);
  const double width = p.T / basis_size;
  const double amp = 1.0 / std::sqrt(width);
  const Eigen::Index dim = basis_size * n1;
  std::vector<Matrix> responses(static_cast<std::size_t>(dim));
  for (Eigen::Index j = 0; j < dim; ++j) {
    const auto interval = static_cast<std::size_t>(j / n1);
    const auto comp = j % n1;
    responses[static_cast<std::size_t>(j)] = solver.response([&](std::size_t k) -> Vector {
      Vector v = Vector::Zero(n1);
      if (k / static_cast<std::size_t>(spb) == interval) v(comp) = amp;
      return v;
    });
  }
  Matrix gram(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      double v = solver.bilinear(responses[static_cast<std::size_t>(i)], responses[static_cast<std::size_t>(j)]);
      if (i / n1 == j / n1) v += p.R(i % n1, j % n1);
      gram(i, j) = v;
      gram(j, i) = v;
    }
  }
  return gram;
}

double h2_form_value(const ModelParams& p, const TimeGrid& grid,
                     const std::function<Vector(std::size_t)>& nu) {
  validate(p);
  const PerturbationSolver solver(p, grid);
  const Matrix r = solver.response(nu);
  double energy = 0.0;
  for (int k = 0; k < grid.n_steps(); ++k) {
    const Vector v = nu(static_cast<std::size_t>(k));
    energy += grid.dt() * v.dot(p.R * v);
  }
  return solver.bilinear(r, r) + energy;
}

H2Result check_h2(const ModelParams& p, const TimeGrid& grid, int basis_size) {
  H2Result r;
  r.basis_size = basis_size;
  r.delta0 = smallest_eigenvalue(assemble_h2_form(p, grid, basis_size));
  r.delta0_doubled = smallest_eigenvalue(assemble_h2_form(p, grid, 2 * basis_size));
  r.verdict = r.delta0 > 1e-8 && r.delta0_doubled > 1e-8;
  return r;
}

CqBound compute_Cq_bound(const ModelParams& p, const TimeGrid& grid) {
  validate(p);
  if (p.H.norm() != 0.0) throw NotApplicableError("C_q bound is only available for H = 0");
  const auto n = p.A.rows();
  const Matrix ham = hamiltonian(p);
  const Matrix phi22_T = mat_exp(ham, p.T).bottomRightCorner(n, n);
  Eigen::FullPivLU<Matrix> lu(phi22_T);
  if (!lu.isInvertible()) throw H1ViolatedError("Phi22(T) is singular");
  const Matrix inv_T = lu.inverse();
  CqBound c;
  std::vector<double> eab;
  eab.reserve(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double t = grid.knot(k);
    const Matrix phi22 = mat_exp(ham, t).bottomRightCorner(n, n);
    c.b1 = std::max(c.b1, phi22.norm());
    c.b2 = std::max(c.b2, (phi22 * inv_T).norm());
    const double e = (mat_exp(p.A, t) * p.B).norm();
    eab.push_back(e);
    c.b5 = std::max(c.b5, e);
  }
  c.b3 = (p.Q * (Matrix::Identity(n, n) - p.Gamma)).norm();
  c.b4 = trapezoid(eab, grid.dt());
  const double T = p.T;
  c.Cq = 2.0 * std::pow(c.b1 * c.b2 * c.b3 * c.b4, 2) * T * T +
         std::pow(c.b1 * c.b3 * c.b5, 2) * std::pow(T, 4) / 6.0;
  const auto n1 = p.R.rows();
  c.margin = smallest_eigenvalue(p.R - p.gamma * c.Cq * Matrix::Identity(n1, n1));
  c.verdict = c.margin > 0.0;
  return c;
}

ContractionResult check_contraction(const ModelParams& p, const RiccatiSolution& K,
                                    const TimeGrid& grid) {
  validate(p);
  if (p.H.norm() != 0.0) throw NotApplicableError("contraction condition is stated for H = 0 only");
  if (!(K.P.grid() == grid)) throw ShapeError("K is not on the given grid");
  const auto n = p.A.rows();
  const std::size_t nk = grid.size();
  ContractionResult c;
  for (std::size_t k = 0; k < nk; ++k) c.c1 = std::max(c.c1, K.P[k].norm());

  // Fundamental matrix X of x' = (A + G - gamma K) x, X(0) = I.
  const Matrix F = p.A + p.G;
  const double g = p.gamma;
  const auto& Kt = K.P;
  OdeField field = [&](double t, const Matrix& X) -> Matrix {
    return (F - g * Kt.sample(t)) * X;
  };
  const Trajectory X = ode_rk4(field, Matrix::Identity(n, n), grid, Direction::Forward);
  std::vector<Matrix> Xinv(nk);
  for (std::size_t k = 0; k < nk; ++k) Xinv[k] = X[k].inverse();
  for (std::size_t t = 0; t < nk; ++t) {
    for (std::size_t s = 0; s <= t; ++s) c.c2 = std::max(c.c2, (X[t] * Xinv[s]).norm());
  }

  // |e^{A j dt}| for every lag, then trapezoid sums for each lower limit t_k.
  std::vector<double> ea(nk);
  const Matrix step = mat_exp(p.A, grid.dt());
  Matrix e = Matrix::Identity(n, n);
  for (std::size_t j = 0; j < nk; ++j) {
    ea[j] = e.norm();
    e = e * step;
  }
  const double T = p.T;
  const double dt = grid.dt();
  for (std::size_t k = 0; k + 1 < nk; ++k) {
    double s3 = 0.0, s4 = 0.0;
    for (std::size_t j = k; j < nk; ++j) {
      const double w = (j == k || j == nk - 1) ? 0.5 * dt : dt;
      const double s = grid.knot(j);
      s3 += w * ea[j - k] * s;
      s4 += w * ea[j - k] * (T * s - 0.5 * s * s);
    }
    c.c3 = std::max(c.c3, s3);
    c.c4 = std::max(c.c4, s4);
  }
  const double sn = control_gain(p).norm();
  const double qn = (p.Q * (Matrix::Identity(n, n) - p.Gamma)).norm();
  c.lhs = c.c2 * sn * qn * (c.c3 + p.gamma * c.c1 * c.c2 * c.c4);
  c.verdict = c.lhs < 1.0;
  return c;
}

BvpSolvability check_bvp_solvability(const ModelParams& p) {
  validate(p);
  const auto n = p.A.rows();
  const Matrix theta = mat_exp(consistency_matrix(p), p.T);
  Matrix sel = Matrix::Zero(3 * n, 2 * n);
  sel.block(n, 0, n, n) = Matrix::Identity(n, n);
  sel.block(2 * n, n, n, n) = Matrix::Identity(n, n);
  const Matrix c_theta = consistency_terminal(p) * theta;
  BvpSolvability b;
  b.det = (c_theta * sel).determinant();
  b.scale = shooting_bound(c_theta, sel);
  b.verdict = std::abs(b.det) > 1e-10 * b.scale;
  return b;
}

bool ConditionsReport::all_required() const { return h1.verdict && h1_riccati && h2.verdict && bvp.verdict; }

ConditionsReport check_all(const ModelParams& p, const SolverSettings& s) {
  validate(p);
  const TimeGrid grid(p.T, s.n_steps);
  ConditionsReport r;
  r.h1 = check_h1_determinant(p, grid);
  std::optional<RiccatiSolution> K;
  try {
    K = solve_indefinite_K(p, grid);
    r.h1_riccati = true;
  } catch (const EscapeTimeError& e) {
    r.h1_riccati = false;
    r.h1_escape_time = e.time();
    r.notes.push_back("(H1) fails: Riccati escape near t=" + std::to_string(e.time()));
  }
  if (r.h1.verdict != r.h1_riccati) r.notes.push_back("(H1) methods disagree on this grid");
  try {
    r.h2 = check_h2(p, grid, s.h2_basis);
  } catch (const H1ViolatedError& e) {
    r.notes.push_back(std::string("(H2) not assessed: ") + e.what());
  }
  if (p.H.norm() == 0.0) {
    try {
      r.cq = compute_Cq_bound(p, grid);
    } catch (const H1ViolatedError& e) {
      r.notes.push_back(std::string("C_q bound not available: ") + e.what());
    }
    if (K) r.contraction = check_contraction(p, *K, grid);
  } else {
    r.notes.push_back("C_q bound and contraction test apply only to H = 0");
  }
  r.bvp = check_bvp_solvability(p);
  return r;
}

nlohmann::json to_json(const ConditionsReport& r) {
  nlohmann::json j;
  j["h1"] = {{"verdict", r.h1.verdict && r.h1_riccati},
             {"determinant_verdict", r.h1.verdict},
             {"riccati_verdict", r.h1_riccati},
             {"method", "Both"},
             {"margin", r.h1.margin},
             {"argmin_time", r.h1.argmin_time}};
  if (r.h1_escape_time) j["h1"]["escape_time"] = *r.h1_escape_time;
  j["h2"] = {{"verdict", r.h2.verdict},
             {"delta0", r.h2.delta0},
             {"delta0_doubled_basis", r.h2.delta0_doubled},
             {"basis_size", r.h2.basis_size}};
  if (r.cq) {
    j["h2_sufficient_Cq"] = {{"verdict", r.cq->verdict}, {"Cq", r.cq->Cq}, {"margin", r.cq->margin},
                             {"b1", r.cq->b1}, {"b2", r.cq->b2}, {"b3", r.cq->b3},
                             {"b4", r.cq->b4}, {"b5", r.cq->b5}};
  }
  if (r.contraction) {
    j["contraction"] = {{"verdict", r.contraction->verdict}, {"lhs", r.contraction->lhs},
                        {"c1", r.contraction->c1}, {"c2", r.contraction->c2},
                        {"c3", r.contraction->c3}, {"c4", r.contraction->c4}};
  }
  j["bvp"] = {{"verdict", r.bvp.verdict}, {"det", r.bvp.det}, {"scale", r.bvp.scale}};
  j["notes"] = r.notes;
  j["all_required"] = r.all_required();
  return j;
}

}  // namespace rmfg
