#include "rmfg/blocks.hpp"

namespace rmfg {

namespace {
Matrix eye(Eigen::Index n) { return Matrix::Identity(n, n); }
}  // namespace

Matrix h1_matrix(const ModelParams& p) {
  const auto n = p.A.rows();
  const Matrix F = p.A + p.G;
  const Matrix top = F + p.gamma * p.H;
  const Matrix qb = p.gamma * p.H * p.H + qhat(p) + F.transpose() * p.H + p.H * F;
  Matrix m(2 * n, 2 * n);
  m << top, -p.gamma * eye(n), qb, -top.transpose();
  return m;
}

Matrix hamiltonian(const ModelParams& p) {
  const auto n = p.A.rows();
  const Matrix F = p.A + p.G;
  Matrix m(2 * n, 2 * n);
  m << F, p.gamma * eye(n), -qhat(p), -F.transpose();
  return m;
}

Matrix consistency_matrix(const ModelParams& p) {
  const auto n = p.A.rows();
  const Matrix F = p.A + p.G;
  const Matrix ig = eye(n) - p.Gamma;
  Matrix m = Matrix::Zero(3 * n, 3 * n);
  m.block(0, 0, n, n) = F;
  m.block(0, n, n, n) = p.gamma * eye(n);
  m.block(0, 2 * n, n, n) = control_gain(p);
  m.block(n, 0, n, n) = -qhat(p);
  m.block(n, n, n, n) = -F.transpose();
  m.block(2 * n, 0, n, n) = p.Q * ig;
  m.block(2 * n, 2 * n, n, n) = -p.A.transpose();
  return m;
}

Vector consistency_forcing(const ModelParams& p) {
  const auto n = p.A.rows();
  const Matrix ig = eye(n) - p.Gamma;
  Vector c = Vector::Zero(3 * n);
  c.segment(n, n) = ig.transpose() * p.Q * p.eta;
  c.segment(2 * n, n) = -p.Q * p.eta;
  return c;
}

Matrix consistency_terminal(const ModelParams& p) {
  const auto n = p.A.rows();
  Matrix c = Matrix::Zero(2 * n, 3 * n);
  c.block(0, 0, n, n) = -p.H;
  c.block(0, n, n, n) = eye(n);
  c.block(n, 0, n, n) = p.H;
  c.block(n, 2 * n, n, n) = eye(n);
  return c;
}

Matrix perturbation_matrix(const ModelParams& p) {
  const auto n = p.A.rows();
  const Matrix F = p.A + p.G;
  const Matrix ig = eye(n) - p.Gamma;
  Matrix m = Matrix::Zero(3 * n, 3 * n);
  m.block(0, 0, n, n) = p.A;
  m.block(n, n, n, n) = F;
  m.block(n, 2 * n, n, n) = p.gamma * eye(n);
  m.block(2 * n, 0, n, n) = -ig.transpose() * p.Q;
  m.block(2 * n, n, n, n) = -qhat(p);
  m.block(2 * n, 2 * n, n, n) = -F.transpose();
  return m;
}

}  // namespace rmfg
