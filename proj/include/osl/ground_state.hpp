// osl: obstacle soliton laboratory
// Copyright (c) 2026 the osl developers

#pragma once

#include "osl/grid.hpp"

#include <vector>

namespace osl {

/// Radial ground state Q of -Lap Q + omega Q = Q^p sampled on r_k = k * dr.
/// Values, first and second radial derivatives are stored so that the
/// profile can be evaluated by quintic Hermite interpolation.
struct GroundState {
  double p = 3.0;
  double omega = 1.0;
  int dim = 1;
  double dr = 0.0;
  std::vector<double> r;
  std::vector<double> q;
  std::vector<double> dq;
  std::vector<double> d2q;
  double q0 = 0.0;
  double delta_fit = 0.0;
  double residual = 0.0;

  double r_max() const { return r.empty() ? 0.0 : r.back(); }
  /// Q(r); zero beyond the last abscissa.
  double value(double radius) const;
  /// Q'(r); zero beyond the last abscissa.
  double derivative(double radius) const;
};

/// Shooting with bisection on Q(0) between the sign-crossing and upturn
/// branches until the bracket is below tol * Q(0).  The numerically
/// unstable far tail is replaced by the decaying solution of the linearized
/// radial equation, matched at Q = 1e-4 Q(0) and blended in over a window of
/// width 2/sqrt(omega) so the profile stays smooth across the join.
GroundState solve_ground_state(double p, double omega, int dim, double tol = 1e-14);

/// Exact scaling Q_omega(x) = omega^{1/(p-1)} Q(sqrt(omega) x) of an omega = 1
/// profile.  The ODE residual is recomputed at the new frequency.
GroundState rescale(const GroundState &gs, double omega);

/// Least-squares decay rate of log Q against sqrt(omega) r over the last
/// third of the profile.
double fit_decay(const GroundState &gs);

/// Relative L2 (radial measure) residual of -Q'' - (d-1)/r Q' + omega Q - Q^p,
/// with Q'' from fourth-order differences of the Q' samples.
double ode_residual(const GroundState &gs);

/// Q(x - center) on the active nodes.
Field sample_on_grid(const GroundState &gs, const GridPtr &grid, const Vec3 &center);

/// Q(x - center) and, if requested, its Cartesian gradient, as real vectors.
void sample_profile(const GroundState &gs, const Grid &grid, const Vec3 &center, RVec &q,
                    std::vector<RVec> *grad = nullptr);

/// Central value of the closed form in d = 1.
double q0_closed_form_1d(double p, double omega);
/// Closed-form 1D ground state ((p+1)/2)^{1/(p-1)} sech^{2/(p-1)}((p-1)x/2),
/// rescaled to frequency omega.
double q_closed_form_1d(double p, double omega, double x);

} // namespace osl
