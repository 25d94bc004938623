#pragma once

// Composite block matrices built from a parameter datum.

#include "rmfg/model.hpp"

namespace rmfg {

/// [A+G+gH, -gI; Qbreve, -(A+G+gH)^T] with Qbreve = gH^2 + Qhat + (A+G)^T H + H(A+G).
Matrix h1_matrix(const ModelParams& p);

/// Hamiltonian [A+G, gI; -Qhat, -(A+G)^T].
Matrix hamiltonian(const ModelParams& p);

/// Consistency system matrix on (m, p, y):
/// [A+G, gI, S; -Qhat, -(A+G)^T, 0; Q(I-Gamma), 0, -A^T].
Matrix consistency_matrix(const ModelParams& p);

/// Constant forcing (0, (I-Gamma)^T Q eta, -Q eta).
Vector consistency_forcing(const ModelParams& p);

/// Terminal selector [-H, I, 0; H, 0, I] acting on (m, p, y).
Matrix consistency_terminal(const ModelParams& p);

/// Perturbation system on (zcheck, z, q) used by the coercivity form:
/// [A, 0, 0; 0, A+G, gI; -(I-Gamma)^T Q, -Qhat, -(A+G)^T].
Matrix perturbation_matrix(const ModelParams& p);

}  // namespace rmfg
