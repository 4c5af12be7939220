// osl: obstacle soliton laboratory
// Copyright (c) 2026 the osl developers

#pragma once

#include "osl/error.hpp"
#include "osl/ground_state.hpp"
#include "osl/grid.hpp"

#include <vector>

namespace osl {

/// L+ = -Lap + omega - p Q^{p-1} and L- = -Lap + omega - Q^{p-1} around the
/// ground state centered at the origin.
struct LinearizedPair {
  GroundState ground;
  GridPtr grid;
  RVec Q;
  std::vector<RVec> dQ; // analytic Cartesian derivatives of Q
  RVec potential;       // Q^{p-1}
  SpMat Lplus;
  SpMat Lminus;
  int stencil = 2; // Laplacian order, 2 or 8
};

/// Rejects a potential that changes by more than 20% of Q(0) between
/// neighbouring nodes.  An 8th-order Laplacian pushes the discrete kernel
/// residuals, and everything that leans on them, far below the 2nd-order
/// default.
LinearizedPair assemble(const GroundState &gs, const GridPtr &grid, int stencil = 2);

/// Same operators with an explicit potential V in place of Q^{p-1}.
LinearizedPair assemble_with_potential(const GroundState &gs, const GridPtr &grid, const RVec &potential,
                                       int stencil = 2);

/// Even radial profile sampled on r_j = r0 + j dr, evaluated by four-point
/// Lagrange interpolation with mirror extension through the origin and zero
/// beyond the last sample.
struct RadialSamples {
  double r0 = 0.0;
  double dr = 0.0;
  std::vector<double> f;
  double value(double r) const;
};

/// Unstable eigenpair of the block operator with L+ y1 = e0 y2 and
/// L- y2 = -e0 y1, normalized so that pairing = -2 int y1 y2 = 1.
struct EigenModes {
  double e0 = 0.0;
  double omega = 1.0;
  double p = 0.0;
  int dim = 1;
  GridPtr grid;
  RVec y1, y2;
  RadialSamples profile1, profile2;
  double pairing = 0.0;
  double residual_plus = 0.0;  // |L+ y1 - e0 y2| / |(y1,y2)|_H1
  double residual_minus = 0.0; // |L- y2 + e0 y1| / |(y1,y2)|_H1
  double rayleigh_e2 = 0.0;    // -(L- L+ y1, y1)/(y1, y1)
  double overlap_Q = 0.0;      // |(y1, Q)| / |y1||Q|
};

/// Thrown when the composed operator has no negative eigenvalue beyond the
/// discretization noise of the generalized kernel.
class SpectrallyStable : public NumericalError {
public:
  explicit SpectrallyStable(const std::string &what) : NumericalError(what) {}
};

/// Shift-invert iteration on L- L+ for its most negative eigenvalue -e0^2,
/// started from a vector with span{Q, dQ} removed.  y2 is rebuilt as
/// L+ y1 / e0.
EigenModes solve_unstable_pair(const LinearizedPair &pair, double tol = 1e-12);

struct ScaledModes {
  EigenModes modes;
  double e_rayleigh = 0.0;   // measured against the omega operators
  double e_linear = 0.0;     // omega * e0
  double e_claimed = 0.0;    // omega^{3/2} * e0, the claimed scaling
  double pairing = 0.0;      // measured pairing of the omega^{1/4} profiles
  double residual = 0.0;     // |L+ y1 - e y2| + |L- y2 + e y1| over |(y1,y2)|_H1
};

/// y_omega(x) = omega^{1/4} y(sqrt(omega) x) sampled on the grid of
/// `pair_omega`; the eigenvalue is recomputed by Rayleigh quotient there.
ScaledModes rescale_modes(const EigenModes &modes, double omega, const LinearizedPair &pair_omega);

/// Phi(h) = (L+ h1, h1) + (L- h2, h2).
double quadratic_form(const LinearizedPair &pair, const RVec &h1, const RVec &h2);

/// Removes the components violating (h1, dQ_j) = 0, (h1, y2) = 0,
/// (h2, Q) = 0, (h2, y1) = 0.  The last two pairs are Im int Y+- conj(h) = 0
/// written out in real and imaginary parts.
void project_constraints(const LinearizedPair &pair, const EigenModes &modes, RVec &h1, RVec &h2);

struct CoercivityCertificate {
  double lambda_min = 0.0;
  double lambda_plus = 0.0;  // block minimum over h1
  double lambda_minus = 0.0; // block minimum over h2
  RVec h1, h2;               // minimizer, unit H1 norm
  int iterations = 0;
  bool certified = false;
};

/// Minimum of Phi(h) / |h|_H1^2 under the constraints, by projected LOBPCG
/// on each block.  Throws NumericalError with the violating direction when
/// the minimum is not positive.
CoercivityCertificate coercivity_certificate(const LinearizedPair &pair, const EigenModes &modes);

/// Smallest eigenvalue of L+ in the plain L2 sense.
double lowest_eigenvalue_Lplus(const LinearizedPair &pair);

/// Appendix family: phi_1 = Y+, mu_1 = i Y-, phi_2 = Y-, mu_2 = i Y+,
/// phi = mu = d_j Q, phi_last = i Q with its dual corrected by zeta_1, zeta_2.
struct BiorthogonalFamily {
  std::vector<CVec> phi, mu;
  RVec zeta;
  Eigen::MatrixXd pairing;    // (phi_j, mu_k)
  double max_offdiag = 0.0;   // max |(phi_j, mu_k)| / |zeta_j| over j != k
  double literal_defect = 0.0; // same measure with the uncorrected dual of i Q
};

BiorthogonalFamily biorthogonal_family(const LinearizedPair &pair, const EigenModes &modes);

/// Sample a mode profile at |x - center| on any grid.
RVec sample_mode(const RadialSamples &prof, const Grid &grid, const Vec3 &center, double amplitude = 1.0,
                 double radial_scale = 1.0);

} // namespace osl
