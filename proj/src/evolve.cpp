// osl: obstacle soliton laboratory
// Copyright (c) 2026 the osl developers

#include "osl/evolve.hpp"
#include "osl/error.hpp"

#include <cmath>
#include <sstream>

namespace osl {

namespace {

CSpMat shifted_identity(const SpMat &lap, cplx a) {
  // I + a Lap as a complex sparse matrix
  CSpMat m = lap.cast<cplx>() * a;
  CSpMat id(lap.rows(), lap.cols());
  id.setIdentity();
  return id + m;
}

ConservationRow log_row(double t, const Field &u, double p, const std::optional<SolitonParams> &ref) {
  SolitonParams prm = ref.value_or(SolitonParams{});
  prm.p = p;
  const Functionals f = functionals(u, prm);
  return {t, f.mass, f.energy, f.lyapunov, norm(u, NormKind::H1)};
}

} // namespace

Stepper::Stepper(GridPtr grid, double dt, double p, double lin_tol, bool nonlinear, int stencil)
    : grid_(std::move(grid)), dt_(dt), p_(p), lin_tol_(lin_tol), nonlinear_(nonlinear) {
  if (dt == 0.0 || !std::isfinite(dt)) throw PreconditionError("time step must be finite and nonzero");
  const cplx half(0.0, 0.5 * dt);
  const SpMat lap = stencil == 2 ? grid_->laplacian() : laplacian_matrix(*grid_, stencil);
  lhs_ = shifted_identity(lap, -half);
  rhs_ = shifted_identity(lap, half);
  lhs_.makeCompressed();
  lu_.compute(lhs_);
  if (lu_.info() != Eigen::Success) throw NumericalError("Crank-Nicolson factorization failed");
}

void Stepper::solve(const CVec &rhs, CVec &out) const {
  out = lu_.solve(rhs);
  const double scale = rhs.norm();
  if (scale == 0.0) return;
  const double res = (lhs_ * out - rhs).norm() / scale;
  if (!(res <= lin_tol_)) {
    std::ostringstream msg;
    msg << "Crank-Nicolson solve residual " << res << " above lin_tol " << lin_tol_;
    throw NumericalError(msg.str());
  }
}

void Stepper::nonlinear_half(CVec &u) const {
  if (!nonlinear_) return;
  const double a = 0.5 * dt_;
  for (Index k = 0; k < u.size(); ++k) {
    const double m = std::abs(u[k]);
    if (m > 0.0) u[k] *= std::polar(1.0, a * std::pow(m, p_ - 1.0));
  }
}

void Stepper::linear(CVec &u) const {
  const CVec rhs = rhs_ * u;
  solve(rhs, u);
}

void Stepper::step(CVec &u) const {
  nonlinear_half(u);
  linear(u);
  nonlinear_half(u);
}

void Stepper::linear_with_source(CVec &w, const CVec &f_start, const CVec &f_end) const {
  // i w_t = -Lap w + F  =>  (I - i dt/2 Lap) w_next = (I + i dt/2 Lap) w - i dt (F + F_next)/2
  CVec rhs = rhs_ * w;
  rhs -= cplx(0.0, 0.5 * dt_) * (f_start + f_end);
  solve(rhs, w);
}

long step_count(const EvolveConfig &cfg) {
  if (!(cfg.dt > 0.0)) throw PreconditionError("dt must be positive (direction follows t1 - t0)");
  const double span = std::abs(cfg.t1 - cfg.t0);
  const double steps = span / cfg.dt;
  const long n = std::lround(steps);
  if (std::abs(steps - n) > 1e-9 * std::max(1.0, steps)) {
    std::ostringstream msg;
    msg << "span " << span << " is not a whole number of steps of " << cfg.dt;
    throw PreconditionError(msg.str());
  }
  return n;
}

Trajectory evolve(const Field &u0, const EvolveConfig &cfg, double p, const SnapshotHook &hook) {
  const Grid &g = *u0.grid;
  if (!u0.values.allFinite()) throw PreconditionError("initial field is not finite");
  if (cfg.dt > cfg.c_stab * g.h() * g.h()) {
    std::ostringstream msg;
    msg << "dt " << cfg.dt << " exceeds the accuracy bound " << cfg.c_stab << " h^2";
    throw PreconditionError(msg.str());
  }
  const long n = step_count(cfg);
  const double sdt = cfg.t1 >= cfg.t0 ? cfg.dt : -cfg.dt;
  if (cfg.time_order != 2 && cfg.time_order != 4) throw PreconditionError("time_order must be 2 or 4");
  // triple jump: w1, w0, w1 with 2 w1 + w0 = 1 and 2 w1^3 + w0^3 = 0
  const double cbrt2 = std::cbrt(2.0);
  const double w1 = cfg.time_order == 4 ? 1.0 / (2.0 - cbrt2) : 1.0;
  const double w0 = 1.0 - 2.0 * w1;
  const Stepper stepper(u0.grid, w1 * sdt, p, cfg.lin_tol, cfg.nonlinear, cfg.stencil);
  std::optional<Stepper> middle;
  if (cfg.time_order == 4) middle.emplace(u0.grid, w0 * sdt, p, cfg.lin_tol, cfg.nonlinear, cfg.stencil);

  Trajectory traj;
  traj.p = p;
  Field u = u0;
  traj.times.push_back(cfg.t0);
  traj.snapshots.push_back(u);
  traj.log.push_back(log_row(cfg.t0, u, p, cfg.reference));
  const double h1_start = std::max(traj.log.back().h1, 1e-300);
  if (hook && !hook(cfg.t0, u)) return traj;

  for (long k = 1; k <= n; ++k) {
    stepper.step(u.values);
    if (middle) {
      middle->step(u.values);
      stepper.step(u.values);
    }
    const double t = k == n ? cfg.t1 : cfg.t0 + k * sdt;
    const bool snap = k == n || (cfg.snapshot_every > 0 && k % cfg.snapshot_every == 0);
    if (!snap) continue;
    const ConservationRow row = log_row(t, u, p, cfg.reference);
    if (!std::isfinite(row.h1) || row.h1 > cfg.blowup_factor * h1_start) {
      std::ostringstream msg;
      msg << "blow-up suspected at t = " << t << ": |u|_H1 = " << row.h1 << " against " << h1_start
          << " at the start";
      throw NumericalError(msg.str());
    }
    traj.times.push_back(t);
    traj.snapshots.push_back(u);
    traj.log.push_back(row);
    if (hook && !hook(t, u)) break;
  }
  return traj;
}

std::vector<double> nls_residual(const Trajectory &traj) {
  const std::size_t m = traj.snapshots.size();
  if (m < 3) throw PreconditionError("nls_residual needs at least three snapshots");
  std::vector<double> out;
  for (std::size_t k = 1; k + 1 < m; ++k) {
    const Field &u = traj.snapshots[k];
    const Grid &g = *u.grid;
    const double span = traj.times[k + 1] - traj.times[k - 1];
    CVec r = cplx(0.0, 1.0) * (traj.snapshots[k + 1].values - traj.snapshots[k - 1].values) / span;
    r += g.laplacian() * u.values;
    for (Index j = 0; j < u.values.size(); ++j) r[j] += std::pow(std::abs(u.values[j]), traj.p - 1.0) * u.values[j];
    out.push_back(norm(g, r, NormKind::L2));
  }
  return out;
}

} // namespace osl
