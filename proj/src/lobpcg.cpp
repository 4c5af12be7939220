// osl: obstacle soliton laboratory
// Copyright (c) 2026 the osl developers

#include "osl/lobpcg.hpp"
#include "osl/error.hpp"

#include <Eigen/Eigenvalues>

namespace osl {

namespace {

Eigen::MatrixXd apply_op(const VecOp &op, const Eigen::MatrixXd &X) {
  Eigen::MatrixXd Y(X.rows(), X.cols());
  for (Index j = 0; j < X.cols(); ++j) Y.col(j) = op(X.col(j));
  return Y;
}

void project_columns(const Projector &project, Eigen::MatrixXd &X) {
  if (!project) return;
  for (Index j = 0; j < X.cols(); ++j) {
    RVec c = X.col(j);
    project(c);
    X.col(j) = c;
  }
}

// Rayleigh-Ritz on span(S): returns coefficients of the m lowest Ritz
// vectors (B-orthonormal) and their values.  Near-dependent directions of
// the basis are dropped through the eigen-decomposition of the Gram matrix.
bool rayleigh_ritz(const Eigen::MatrixXd &S, const Eigen::MatrixXd &AS, const Eigen::MatrixXd &BS, Index m,
                   Eigen::MatrixXd &C, RVec &theta) {
  Eigen::MatrixXd G = S.transpose() * BS;
  G = 0.5 * (G + G.transpose());
  Eigen::MatrixXd H = S.transpose() * AS;
  H = 0.5 * (H + H.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eg(G);
  const RVec d = eg.eigenvalues();
  const double dmax = d.maxCoeff();
  std::vector<Index> keep;
  for (Index i = 0; i < d.size(); ++i)
    if (d[i] > 1e-13 * dmax) keep.push_back(i);
  if (static_cast<Index>(keep.size()) < m) return false;
  Eigen::MatrixXd Z(S.cols(), keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) Z.col(i) = eg.eigenvectors().col(keep[i]) / std::sqrt(d[keep[i]]);
  Eigen::MatrixXd Hs = Z.transpose() * H * Z;
  Hs = 0.5 * (Hs + Hs.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eh(Hs);
  C = Z * eh.eigenvectors().leftCols(m);
  theta = eh.eigenvalues().head(m);
  return true;
}

} // namespace

LobpcgResult lobpcg_min(const VecOp &A, const VecOp &B, const VecOp &precond, const Projector &project,
                        Eigen::MatrixXd X, double tol, int max_iter) {
  const Index m = X.cols();
  project_columns(project, X);
  Eigen::MatrixXd AX = apply_op(A, X), BX = apply_op(B, X);
  Eigen::MatrixXd C;
  RVec theta;
  if (!rayleigh_ritz(X, AX, BX, m, C, theta)) throw NumericalError("LOBPCG start block is rank deficient");
  X = X * C;
  AX = AX * C;
  BX = BX * C;

  Eigen::MatrixXd P(X.rows(), 0), AP(X.rows(), 0), BP(X.rows(), 0);
  LobpcgResult out;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::MatrixXd R = AX - BX * theta.asDiagonal();
    project_columns(project, R);
    double worst = 0.0;
    for (Index j = 0; j < m; ++j) {
      const double scale = AX.col(j).norm() + std::abs(theta[j]) * BX.col(j).norm();
      worst = std::max(worst, R.col(j).norm() / (scale > 0.0 ? scale : 1.0));
    }
    out.iterations = it;
    out.residual = worst;
    if (worst <= tol) {
      out.converged = true;
      break;
    }
    Eigen::MatrixXd W = precond ? apply_op(precond, R) : R;
    project_columns(project, W);
    for (Index j = 0; j < W.cols(); ++j) {
      const double nrm = W.col(j).norm();
      if (nrm > 0.0) W.col(j) /= nrm;
    }
    const Eigen::MatrixXd AW = apply_op(A, W), BW = apply_op(B, W);

    const Index np = P.cols();
    Eigen::MatrixXd S(X.rows(), m + W.cols() + np), AS(S.rows(), S.cols()), BS(S.rows(), S.cols());
    S << X, W, P;
    AS << AX, AW, AP;
    BS << BX, BW, BP;
    if (!rayleigh_ritz(S, AS, BS, m, C, theta)) {
      // drop the search directions and retry with [X, W]
      S.conservativeResize(Eigen::NoChange, m + W.cols());
      AS.conservativeResize(Eigen::NoChange, m + W.cols());
      BS.conservativeResize(Eigen::NoChange, m + W.cols());
      if (!rayleigh_ritz(S, AS, BS, m, C, theta)) throw NumericalError("LOBPCG basis collapsed");
    }
    const Eigen::MatrixXd Ct = C.bottomRows(S.cols() - m);
    P = S.rightCols(S.cols() - m) * Ct;
    AP = AS.rightCols(S.cols() - m) * Ct;
    BP = BS.rightCols(S.cols() - m) * Ct;
    X = S * C;
    AX = AS * C;
    BX = BS * C;
  }
  out.lambda = theta;
  out.x = X;
  return out;
}

} // namespace osl
