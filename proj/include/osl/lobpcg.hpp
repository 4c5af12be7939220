// osl: obstacle soliton laboratory
// Copyright (c) 2026 the osl developers

#pragma once

#include "osl/grid.hpp"

#include <functional>

namespace osl {

using VecOp = std::function<RVec(const RVec &)>;
using Projector = std::function<void(RVec &)>;

struct LobpcgResult {
  RVec lambda;       // ascending Ritz values
  Eigen::MatrixXd x; // B-orthonormal Ritz vectors
  int iterations = 0;
  double residual = 0.0; // max relative residual of the returned pairs
  bool converged = false;
};

/// Smallest eigenpairs of the pencil (A, B) restricted to the range of an
/// orthogonal projector, by locally optimal block preconditioned conjugate
/// gradients.  Every basis vector is re-projected before the Rayleigh-Ritz
/// step, so the returned vectors satisfy the constraints exactly.
LobpcgResult lobpcg_min(const VecOp &A, const VecOp &B, const VecOp &precond, const Projector &project,
                        Eigen::MatrixXd x0, double tol = 1e-10, int max_iter = 500);

} // namespace osl
