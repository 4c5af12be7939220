// osl: obstacle soliton laboratory
// Copyright (c) 2026 the osl developers

#pragma once

#include "osl/evolve.hpp"
#include "osl/ground_state.hpp"
#include "osl/soliton.hpp"

#include <string>
#include <vector>

namespace osl {

/// Forcing of the remainder equation i r_t + Lap r = A0 + A1 + A2 + A3 for
/// u = R + r, R = Psi H, H the free boosted soliton and N(u) = |u|^{p-1} u:
///   A0 = Psi N(H) - N(R) - 2 grad Psi . grad H - Lap Psi H
///   A1 = -DN(R) r
///   A2 + A3 = -(N(R + r) - N(R) - DN(R) r)
/// For p = 3 the remainder splits into A2 = -(2 R |r|^2 + conj(R) r^2) and
/// A3 = -|r|^2 r; otherwise A2 carries the whole remainder and A3 = 0.
class SourceSet {
public:
  SourceSet(SolitonParams params, GroundState gs, CutoffPsi psi, GridPtr grid);

  const GridPtr &grid() const { return grid_; }
  const SolitonParams &params() const { return params_; }
  const CutoffPsi &psi() const { return psi_; }

  /// Psi-weighted soliton and its free version at time t.
  Field R(double t) const;
  Field H(double t) const;

  CVec A0(double t) const;
  CVec A1(const CVec &r, double t) const;
  CVec A2(const CVec &r, double t) const;
  CVec A3(const CVec &r, double t) const;
  CVec total(const CVec &r, double t) const;

  /// Drops A0 (for probes of the r-dependent part).
  bool forcing = true;

private:
  struct Background {
    CVec H, R;
    std::vector<CVec> gradH;
  };
  Background background(double t) const;
  CVec a0_from(const Background &b) const;

  SolitonParams params_;
  GroundState gs_;
  CutoffPsi psi_;
  GridPtr grid_;
};

/// Checks the soliton stays inside the box up to Tmax.
SourceSet make_sources(const SolitonParams &params, const GroundState &gs, const CutoffPsi &psi,
                       const GridPtr &grid, double Tmax);

/// Uniform time grid T0 + k dt, k = 0..K, with one field per node.
struct TimeSeries {
  double T0 = 0.0;
  double dt = 0.0;
  std::vector<CVec> values;

  double time(std::size_t k) const { return T0 + static_cast<double>(k) * dt; }
  double Tmax() const { return time(values.size() - 1); }
};

/// Source selector for the Duhamel map.
enum class SourcePart { all, a0, a1, a2, a3 };

/// w solving i w_t + Lap w = F(r) backward from w(Tmax) = 0 by Crank-Nicolson
/// with the source averaged over each step.  F is sampled on the same time
/// grid as r.
TimeSeries duhamel_apply(const SourceSet &src, const TimeSeries &r, SourcePart part = SourcePart::all,
                         double lin_tol = 1e-12);

/// Same backward sweep for an arbitrary sampled source.
TimeSeries duhamel_from_samples(const GridPtr &grid, const std::vector<CVec> &F, double T0, double dt,
                                double lin_tol = 1e-12);

struct EnormConfig {
  double delta = 0.8;
  double omega = 1.0;
  double speed = 1.0;
};

/// sup_t e^{delta sqrt(omega) |v| t} (|v|^{-3} |r|_H2 + |r|_L2).
double e_norm(const Grid &grid, const TimeSeries &r, const EnormConfig &cfg);
double e_norm(const Trajectory &traj, const EnormConfig &cfg);

struct PicardConfig {
  double T0 = 1.0;
  double Tmax = 3.0;
  double dt = 2e-3;
  int iters = 8;
  double lin_tol = 1e-12;
  EnormConfig enorm;
};

struct PicardReport {
  std::vector<double> iterates;           // |r^k|_E, k = 1..
  std::vector<double> increments;         // |r^{k+1} - r^k|_E, k = 0..
  std::vector<double> contraction_ratios; // |r^{k+1} - r^k|_E / |r^k - r^{k-1}|_E
  double measured_ratio = 0.0;            // geometric mean of the ratios above the roundoff floor
  double J0 = 0.0;                        // |J0|_E
  double J1 = 0.0;                        // |J1(r)|_E / |r|_E
  double J2 = 0.0;                        // |J2(r)|_E / |r|_E^2
  double J3 = 0.0;                        // |J3(r)|_E / |r|_E^3
  std::vector<double> final_residual;     // nls_residual of R + r per interior step
  double max_residual = 0.0;
  double decay_rate = 0.0;                // fitted rate of |r(t)|_L2 on the first half
  bool contracting = false;               // measured ratio < 1 and no divergence
  std::string status;                     // "converged", "iterations_exhausted", "non_contraction"
};

struct PicardResult {
  PicardReport report;
  TimeSeries r;
};

/// r^0 = 0, r^{k+1} = Phi(r^k).  Three consecutive increases of the E-norm of
/// the increment stop the iteration with status non_contraction.
PicardResult picard(const SourceSet &src, const PicardConfig &cfg);

/// Least-squares slope of -log |r(t)|_L2 over the samples with t in [ta, tb].
double fit_decay_rate(const Grid &grid, const TimeSeries &r, double ta, double tb);

/// |grad f|^2 <= |Lap f| |f| for the discrete Dirichlet operators; returns
/// the slack |Lap f||f| - |grad f|^2 (nonnegative when the inequality holds).
double interpolation_slack(const Grid &grid, const CVec &f);
bool interpolation_check(const Grid &grid, const CVec &f);

} // namespace osl
