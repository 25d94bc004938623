#pragma once

#include "rmfg/model.hpp"

namespace rmfg::test {

inline Matrix s(double v) { return Matrix::Constant(1, 1, v); }
inline Vector sv(double v) { return Vector::Constant(1, v); }

inline ModelParams scalar(double A, double B, double G, double D, double Gamma, double eta,
                          double Q, double R, double gamma, double H, double T, double m0) {
  return {s(A), s(B), s(G), s(D), s(Gamma), sv(eta), s(Q), s(R), gamma, s(H), T, sv(m0)};
}

// Scalar datum used throughout: A=0.5, B=1, G=0.25, D=0.3, Gamma=0.8, eta=1, Q=1, R=1.5, gamma=1.
inline ModelParams ex22(double T = 1.3) {
  return scalar(0.5, 1, 0.25, 0.3, 0.8, 1, 1, 1.5, 1, 0, T, 1);
}

// Two-dimensional datum with one control and nonzero H.
inline ModelParams planar() {
  ModelParams q;
  q.A = Matrix{{0.2, 0.4}, {-0.3, 0.1}};
  q.B = Matrix{{1.0}, {0.5}};
  q.G = Matrix{{0.1, 0.0}, {0.05, 0.2}};
  q.D = Matrix::Identity(2, 2) * 0.2;
  q.Gamma = Matrix::Identity(2, 2) * 0.5;
  q.eta = Vector{{1.0, -0.5}};
  q.Q = Matrix{{1.0, 0.2}, {0.2, 0.8}};
  q.R = s(1.2);
  q.gamma = 0.5;
  q.H = Matrix{{0.3, 0.0}, {0.0, 0.1}};
  q.T = 1.0;
  q.m0 = Vector{{1.0, 0.0}};
  return q;
}

}  // namespace rmfg::test
