// osl: obstacle soliton laboratory
// Copyright (c) 2026 the osl developers

#pragma once

#include "osl/ground_state.hpp"
#include "osl/grid.hpp"
#include "osl/linearized.hpp"

namespace osl {

/// Boosted soliton e^{i phi} Q_omega(x - x0 - t v) with
/// phi = x.v/2 - |v|^2 t/4 + omega t + theta0.
struct SolitonParams {
  double omega = 1.0;
  Vec3 v{0.0, 0.0, 0.0};
  double theta0 = 0.0;
  Vec3 x0{0.0, 0.0, 0.0};
  double p = 3.0;

  double speed() const;
  Vec3 center(double t) const;
  /// Time-dependent part of the phase reduced mod 2pi; add x.v/2 per node.
  double phase_offset(double t) const;
};

/// Throws PreconditionError unless params.omega > 0 and the center at time t
/// keeps `margin` away from the box faces.
void check_center(const SolitonParams &params, const Grid &grid, double t, double margin);

/// R(t) = Q(x - c(t)) Psi e^{i phi}; psi == nullptr gives H(t) (Psi = 1).
Field soliton_field(const SolitonParams &params, const GroundState &gs, double t, const GridPtr &grid,
                    const CutoffPsi *psi = nullptr);

/// Y_{+-}(t) = (y1 +- i y2)(x - c(t)) Psi e^{i phi}.  sign is +1 or -1.
Field eigenmode_field(const SolitonParams &params, const EigenModes &modes, double t, const GridPtr &grid,
                      const CutoffPsi *psi, int sign);

struct Functionals {
  double mass = 0.0;
  double energy = 0.0;
  Vec3 momentum{0.0, 0.0, 0.0};
  double lyapunov = 0.0;
};

/// M = int |u|^2, E = 1/2 int |grad u|^2 - 1/(p+1) int |u|^{p+1},
/// P = Im int grad u conj(u), lyapunov = E + (omega/2 + |v|^2/8) M - v.P/2.
/// order 2 matches the stepper's operators; order 8 is for identities that
/// need quadrature far below the 2nd-order truncation error.
Functionals functionals(const Field &u, const SolitonParams &params, int order = 2);

/// Integrals of the radial profile: M(Q), |grad Q|^2, int Q^{p+1}, E(Q).
struct ProfileIntegrals {
  double mass = 0.0;
  double grad2 = 0.0;
  double power = 0.0;
  double energy = 0.0;
};
ProfileIntegrals profile_integrals(const GroundState &gs);

/// s = 3/2 - 2/(p-1).
double threshold_exponent(double p);
/// Same for p = num/den evaluated in integer arithmetic, exact at 7/3, 3, 5.
double threshold_exponent(long num, long den);

struct ThresholdReport {
  double s = 0.0;
  bool outside_range = false; // p outside (7/3, 5)
  double mass = 0.0, energy = 0.0, grad_norm = 0.0;
  double scale_inv_grad = 0.0; // |u|^{1-s} |grad u|^s
  double scale_inv_me = 0.0;   // M^{1-s} E^s with the sign of E carried
  double q_scale_inv_grad = 0.0;
  double q_scale_inv_me = 0.0;
};

/// Both scale-invariant quantities of u next to those of Q (gs must match p).
ThresholdReport threshold_report(const Field &u, double p, const GroundState &gs);

/// u(x - v t) e^{i(x.v/2 - |v|^2 t/4)} with the shift rounded to whole
/// cells.  Throws when the shift would push mass off the active nodes.
Field galilean_boost(const Field &u, const Vec3 &v, double t);

} // namespace osl
