// osl: obstacle soliton laboratory
// Copyright (c) 2026 the osl developers

#pragma once

#include "osl/grid.hpp"
#include "osl/soliton.hpp"

#include <Eigen/SparseLU>

#include <functional>
#include <optional>
#include <vector>

namespace osl {

using CSpMat = Eigen::SparseMatrix<cplx>;

struct EvolveConfig {
  double dt = 1e-3;             // step magnitude; the sign follows t1 - t0
  double t0 = 0.0;
  double t1 = 1.0;
  double lin_tol = 1e-12;       // relative residual accepted from the CN solve
  int snapshot_every = 0;       // 0 keeps only the end points
  double c_stab = 1e3;          // accuracy bound |dt| <= c_stab h^2
  double blowup_factor = 1e3;   // abort when |u|_H1 exceeds this times the start
  bool nonlinear = true;
  int stencil = 2;              // Laplacian order, 2 or 8
  int time_order = 2;           // 2: Strang; 4: triple-jump composition of Strang steps
  /// Frequency and velocity used to assemble the logged lyapunov combination.
  std::optional<SolitonParams> reference;
};

/// Strang splitting of i u_t + Lap u = -|u|^{p-1} u: half nonlinear phase
/// rotation, Crank-Nicolson step for the masked Laplacian, half rotation.
/// The CN matrix is factored once per (grid, dt, stencil).
class Stepper {
public:
  Stepper(GridPtr grid, double dt, double p, double lin_tol = 1e-12, bool nonlinear = true, int stencil = 2);

  double dt() const { return dt_; }
  const GridPtr &grid() const { return grid_; }

  void step(CVec &u) const;
  void nonlinear_half(CVec &u) const;
  void linear(CVec &u) const;

  /// Backward CN step of i w_t + Lap w = F from t+dt to t with the source
  /// averaged over the two ends; dt() must be negative for a backward sweep.
  void linear_with_source(CVec &w, const CVec &f_start, const CVec &f_end) const;

private:
  void solve(const CVec &rhs, CVec &out) const;

  GridPtr grid_;
  double dt_;
  double p_;
  double lin_tol_;
  bool nonlinear_;
  CSpMat lhs_, rhs_;
  Eigen::SparseLU<CSpMat> lu_;
};

struct ConservationRow {
  double t = 0.0;
  double mass = 0.0;
  double energy = 0.0;
  double lyapunov = 0.0;
  double h1 = 0.0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Field> snapshots;
  std::vector<ConservationRow> log;
  double p = 3.0;
};

/// Number of whole steps of size |dt| in [t0, t1]; throws unless the span is
/// a multiple of dt to 1e-9 relative.
long step_count(const EvolveConfig &cfg);

/// Called after every snapshot; returning false stops the run.
using SnapshotHook = std::function<bool(double t, const Field &u)>;

Trajectory evolve(const Field &u0, const EvolveConfig &cfg, double p, const SnapshotHook &hook = {});

/// |i d_t u + Lap u + |u|^{p-1} u|_L2 at each interior snapshot, with the
/// time derivative from centered differences across neighbouring snapshots.
std::vector<double> nls_residual(const Trajectory &traj);

} // namespace osl
