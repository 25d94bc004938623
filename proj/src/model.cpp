#include "rmfg/model.hpp"

#include <cmath>
#include <string>

namespace rmfg {

namespace {

std::string dims(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void check_shape(std::vector<Violation>& out, const char* field, const Matrix& m, Eigen::Index r,
                 Eigen::Index c) {
  if (m.rows() != r || m.cols() != c) {
    out.push_back({field, "expected " + std::to_string(r) + "x" + std::to_string(c) + ", got " + dims(m)});
  }
}

bool check_finite(std::vector<Violation>& out, const char* field, const Matrix& m) {
  if (!m.allFinite()) {
    out.push_back({field, "non-finite entry"});
    return false;
  }
  return true;
}

void check_psd(std::vector<Violation>& out, const char* field, const Matrix& m, bool strict) {
  if (m.rows() != m.cols() || m.rows() == 0 || !m.allFinite()) return;
  const double scale = m.norm();
  if ((m - m.transpose()).norm() > 1e-8 * (1.0 + scale)) {
    out.push_back({field, "not symmetric"});
    return;
  }
  const double lam = smallest_eigenvalue(0.5 * (m + m.transpose()));
  if (strict) {
    if (!(lam > 1e-12 * (1.0 + scale))) {
      out.push_back({field, "not positive definite (smallest eigenvalue " + std::to_string(lam) + ")"});
    }
  } else if (lam < -1e-10 * (1.0 + scale)) {
    out.push_back({field, "not positive semidefinite (smallest eigenvalue " + std::to_string(lam) + ")"});
  }
}

}  // namespace

std::vector<Violation> violations(const ModelParams& p) {
  std::vector<Violation> out;
  const Eigen::Index n = p.A.rows();
  if (n == 0 || p.A.cols() != n) {
    out.push_back({"A", "must be square and nonempty, got " + dims(p.A)});
    return out;
  }
  const Eigen::Index n1 = p.B.cols();
  if (n1 == 0) out.push_back({"B", "needs at least one column"});
  check_shape(out, "B", p.B, n, n1);
  check_shape(out, "G", p.G, n, n);
  if (p.D.cols() == 0) out.push_back({"D", "needs at least one column"});
  check_shape(out, "D", p.D, n, p.D.cols());
  check_shape(out, "Gamma", p.Gamma, n, n);
  check_shape(out, "eta", p.eta, n, 1);
  check_shape(out, "Q", p.Q, n, n);
  check_shape(out, "R", p.R, n1, n1);
  check_shape(out, "H", p.H, n, n);
  check_shape(out, "m0", p.m0, n, 1);
  const std::pair<const char*, const Matrix*> all[] = {
      {"A", &p.A}, {"B", &p.B}, {"G", &p.G}, {"D", &p.D}, {"Gamma", &p.Gamma},
      {"Q", &p.Q}, {"R", &p.R}, {"H", &p.H}};
  for (const auto& [name, m] : all) check_finite(out, name, *m);
  check_finite(out, "eta", p.eta);
  check_finite(out, "m0", p.m0);
  check_psd(out, "Q", p.Q, false);
  check_psd(out, "H", p.H, false);
  check_psd(out, "R", p.R, true);
  if (!(std::isfinite(p.gamma) && p.gamma > 0.0)) out.push_back({"gamma", "must be positive and finite"});
  if (!(std::isfinite(p.T) && p.T > 0.0)) out.push_back({"T", "must be positive and finite"});
  return out;
}

DerivedDims validate(const ModelParams& p) {
  auto v = violations(p);
  if (!v.empty()) throw InvalidModelError(std::move(v));
  DerivedDims d;
  d.n = p.A.rows();
  d.n1 = p.B.cols();
  d.n2 = p.D.cols();
  d.Qhat = qhat(p);
  return d;
}

Matrix qhat(const ModelParams& p) {
  const Matrix ig = Matrix::Identity(p.A.rows(), p.A.rows()) - p.Gamma;
  const Matrix q = ig.transpose() * p.Q * ig;
  return 0.5 * (q + q.transpose());
}

Matrix rinv_bt(const ModelParams& p) { return p.R.llt().solve(p.B.transpose()); }

Matrix control_gain(const ModelParams& p) {
  const Matrix s = p.B * rinv_bt(p);
  return 0.5 * (s + s.transpose());
}

Vector InitSpec::mean(std::size_t agent, const ModelParams& p) const {
  switch (mode) {
    case InitMode::Shared:
      return shared ? *shared : p.m0;
    case InitMode::Deterministic:
      return points.at(agent);
    case InitMode::Random:
      return means.at(agent % means.size());
  }
  return p.m0;
}

Matrix InitSpec::covariance(std::size_t agent, const ModelParams& p) const {
  if (mode == InitMode::Random && !covariances.empty()) return covariances.at(agent % covariances.size());
  return Matrix::Zero(p.A.rows(), p.A.rows());
}

void validate_init(const InitSpec& init, std::size_t N, Eigen::Index n) {
  std::vector<Violation> out;
  auto vec_ok = [&](const Vector& v, const std::string& field) {
    if (v.size() != n) out.push_back({field, "expected length " + std::to_string(n)});
    else if (!v.allFinite()) out.push_back({field, "non-finite entry"});
  };
  switch (init.mode) {
    case InitMode::Shared:
      if (init.shared) vec_ok(*init.shared, "init.value");
      break;
    case InitMode::Deterministic:
      if (init.points.size() != N) {
        out.push_back({"init.points", "has " + std::to_string(init.points.size()) +
                                          " entries for N=" + std::to_string(N)});
      }
      for (std::size_t i = 0; i < init.points.size(); ++i) vec_ok(init.points[i], "init.points[" + std::to_string(i) + "]");
      break;
    case InitMode::Random:
      if (init.means.empty()) out.push_back({"init.means", "must be nonempty"});
      for (std::size_t i = 0; i < init.means.size(); ++i) vec_ok(init.means[i], "init.means[" + std::to_string(i) + "]");
      for (std::size_t i = 0; i < init.covariances.size(); ++i) {
        const auto& c = init.covariances[i];
        const std::string f = "init.covariances[" + std::to_string(i) + "]";
        if (c.rows() != n || c.cols() != n) {
          out.push_back({f, "expected " + std::to_string(n) + "x" + std::to_string(n)});
        } else if (!c.allFinite()) {
          out.push_back({f, "non-finite entry"});
        } else if ((c - c.transpose()).norm() > 1e-8 * (1.0 + c.norm())) {
          out.push_back({f, "not symmetric"});
        } else if (smallest_eigenvalue(c) < -1e-10 * (1.0 + c.norm())) {
          out.push_back({f, "not positive semidefinite"});
        }
      }
      break;
  }
  if (!out.empty()) throw InvalidModelError(std::move(out));
}

InitSpec shared_init(const Vector& value) {
  InitSpec s;
  s.mode = InitMode::Shared;
  s.shared = value;
  return s;
}

}  // namespace rmfg
