// osl: obstacle soliton laboratory
// Copyright (c) 2026 the osl developers

#include "osl/fixedpoint.hpp"
#include "osl/error.hpp"

#include <cmath>
#include <sstream>

namespace osl {

namespace {

// |z|^{p-1} z
CVec nonlinearity(const CVec &u, double p) {
  CVec out(u.size());
  for (Index k = 0; k < u.size(); ++k) {
    const double m = std::abs(u[k]);
    out[k] = m > 0.0 ? std::pow(m, p - 1.0) * u[k] : cplx(0.0);
  }
  return out;
}

// DN(R) r = (p+1)/2 |R|^{p-1} r + (p-1)/2 |R|^{p-3} R^2 conj(r)
CVec linearized_nonlinearity(const CVec &R, const CVec &r, double p) {
  CVec out(R.size());
  for (Index k = 0; k < R.size(); ++k) {
    const double m = std::abs(R[k]);
    if (m == 0.0) {
      out[k] = 0.0;
      continue;
    }
    const double mp = std::pow(m, p - 1.0);
    out[k] = 0.5 * (p + 1.0) * mp * r[k] + 0.5 * (p - 1.0) * mp * (R[k] / m) * (R[k] / m) * std::conj(r[k]);
  }
  return out;
}

} // namespace

SourceSet::SourceSet(SolitonParams params, GroundState gs, CutoffPsi psi, GridPtr grid)
    : params_(std::move(params)), gs_(std::move(gs)), psi_(std::move(psi)), grid_(std::move(grid)) {
  if (psi_.psi.size() != grid_->size()) throw PreconditionError("cutoff was built on a different grid");
}

SourceSet::Background SourceSet::background(double t) const {
  const Grid &g = *grid_;
  RVec q;
  std::vector<RVec> dq;
  sample_profile(gs_, g, params_.center(t), q, &dq);
  const double off = params_.phase_offset(t);
  Background b;
  b.H.resize(g.size());
  b.gradH.assign(g.dim(), CVec(g.size()));
  for (Index k = 0; k < g.size(); ++k) {
    double xv = 0.0;
    for (int ax = 0; ax < g.dim(); ++ax) xv += g.coord(k, ax) * params_.v[ax];
    const cplx e = std::polar(1.0, 0.5 * xv + off);
    b.H[k] = q[k] * e;
    for (int ax = 0; ax < g.dim(); ++ax) b.gradH[ax][k] = cplx(dq[ax][k], 0.5 * params_.v[ax] * q[k]) * e;
  }
  b.R = psi_.psi.cast<cplx>().cwiseProduct(b.H);
  return b;
}

Field SourceSet::H(double t) const { return {grid_, background(t).H}; }
Field SourceSet::R(double t) const { return {grid_, background(t).R}; }

CVec SourceSet::a0_from(const Background &b) const {
  const double p = params_.p;
  CVec out = psi_.psi.cast<cplx>().cwiseProduct(nonlinearity(b.H, p)) - nonlinearity(b.R, p);
  for (int ax = 0; ax < grid_->dim(); ++ax) out -= 2.0 * psi_.grad_psi[ax].cast<cplx>().cwiseProduct(b.gradH[ax]);
  out -= psi_.lap_psi.cast<cplx>().cwiseProduct(b.H);
  return out;
}

CVec SourceSet::A0(double t) const { return a0_from(background(t)); }

CVec SourceSet::A1(const CVec &r, double t) const {
  return -linearized_nonlinearity(background(t).R, r, params_.p);
}

CVec SourceSet::A2(const CVec &r, double t) const {
  const CVec R = background(t).R;
  if (params_.p == 3.0) {
    CVec out(r.size());
    for (Index k = 0; k < r.size(); ++k) out[k] = -(2.0 * R[k] * std::norm(r[k]) + std::conj(R[k]) * r[k] * r[k]);
    return out;
  }
  const CVec Rr = R + r;
  return -(nonlinearity(Rr, params_.p) - nonlinearity(R, params_.p) - linearized_nonlinearity(R, r, params_.p));
}

CVec SourceSet::A3(const CVec &r, double /*t*/) const {
  if (params_.p != 3.0) return CVec::Zero(r.size());
  CVec out(r.size());
  for (Index k = 0; k < r.size(); ++k) out[k] = -std::norm(r[k]) * r[k];
  return out;
}

CVec SourceSet::total(const CVec &r, double t) const {
  const Background b = background(t);
  const double p = params_.p;
  // A1 + A2 + A3 = -(N(R + r) - N(R)) evaluated in one go
  CVec out = -(nonlinearity(CVec(b.R + r), p) - nonlinearity(b.R, p));
  if (forcing) out += a0_from(b);
  return out;
}

SourceSet make_sources(const SolitonParams &params, const GroundState &gs, const CutoffPsi &psi,
                       const GridPtr &grid, double Tmax) {
  const double delta = gs.delta_fit > 0.0 ? gs.delta_fit : 1.0;
  check_center(params, *grid, Tmax, 10.0 / (delta * std::sqrt(params.omega)));
  if (std::abs(gs.omega - params.omega) > 1e-12 * params.omega)
    throw PreconditionError("ground state frequency differs from the soliton frequency");
  return SourceSet(params, gs, psi, grid);
}

TimeSeries duhamel_from_samples(const GridPtr &grid, const std::vector<CVec> &F, double T0, double dt,
                                double lin_tol) {
  if (F.size() < 2) throw PreconditionError("Duhamel sweep needs at least two time samples");
  const Stepper stepper(grid, -dt, 1.0, lin_tol, false);
  TimeSeries w;
  w.T0 = T0;
  w.dt = dt;
  w.values.assign(F.size(), CVec::Zero(grid->size()));
  CVec cur = CVec::Zero(grid->size());
  for (std::size_t k = F.size() - 1; k > 0; --k) {
    stepper.linear_with_source(cur, F[k], F[k - 1]);
    w.values[k - 1] = cur;
  }
  return w;
}

TimeSeries duhamel_apply(const SourceSet &src, const TimeSeries &r, SourcePart part, double lin_tol) {
  std::vector<CVec> F(r.values.size());
  for (std::size_t k = 0; k < F.size(); ++k) {
    const double t = r.time(k);
    switch (part) {
    case SourcePart::all: F[k] = src.total(r.values[k], t); break;
    case SourcePart::a0: F[k] = src.A0(t); break;
    case SourcePart::a1: F[k] = src.A1(r.values[k], t); break;
    case SourcePart::a2: F[k] = src.A2(r.values[k], t); break;
    case SourcePart::a3: F[k] = src.A3(r.values[k], t); break;
    }
  }
  return duhamel_from_samples(src.grid(), F, r.T0, r.dt, lin_tol);
}

namespace {

double weighted(const Grid &g, const CVec &r, double t, const EnormConfig &cfg) {
  if (!(cfg.speed > 0.0)) throw PreconditionError("E-norm needs |v| > 0");
  const double l2 = norm(g, r, NormKind::L2);
  const double h2 = norm(g, r, NormKind::H2);
  return std::exp(cfg.delta * std::sqrt(cfg.omega) * cfg.speed * t) * (h2 / std::pow(cfg.speed, 3) + l2);
}

} // namespace

double e_norm(const Grid &grid, const TimeSeries &r, const EnormConfig &cfg) {
  double s = 0.0;
  for (std::size_t k = 0; k < r.values.size(); ++k) s = std::max(s, weighted(grid, r.values[k], r.time(k), cfg));
  return s;
}

double e_norm(const Trajectory &traj, const EnormConfig &cfg) {
  double s = 0.0;
  for (std::size_t k = 0; k < traj.snapshots.size(); ++k)
    s = std::max(s, weighted(*traj.snapshots[k].grid, traj.snapshots[k].values, traj.times[k], cfg));
  return s;
}

double fit_decay_rate(const Grid &grid, const TimeSeries &r, double ta, double tb) {
  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  int m = 0;
  for (std::size_t k = 0; k < r.values.size(); ++k) {
    const double t = r.time(k);
    if (t < ta - 1e-12 || t > tb + 1e-12) continue;
    const double n = norm(grid, r.values[k], NormKind::L2);
    if (!(n > 0.0)) continue;
    const double y = std::log(n);
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
    ++m;
  }
  if (m < 3) throw PreconditionError("decay fit needs at least three nonzero samples");
  return -(m * sty - st * sy) / (m * stt - st * st);
}

PicardResult picard(const SourceSet &src, const PicardConfig &cfg) {
  if (cfg.iters < 3) throw PreconditionError("picard needs at least 3 iterations");
  if (!(cfg.Tmax > cfg.T0)) throw PreconditionError("picard needs Tmax > T0");
  if (!(src.params().speed() > 0.0)) throw PreconditionError("picard needs |v| > 0");
  const GridPtr &grid = src.grid();
  const Grid &g = *grid;
  EvolveConfig span;
  span.dt = cfg.dt;
  span.t0 = cfg.T0;
  span.t1 = cfg.Tmax;
  const long K = step_count(span);

  TimeSeries r;
  r.T0 = cfg.T0;
  r.dt = cfg.dt;
  r.values.assign(K + 1, CVec::Zero(g.size()));

  PicardResult out;
  PicardReport &rep = out.report;
  double prev_inc = 0.0;
  int growth = 0;
  rep.status = "iterations_exhausted";
  for (int it = 0; it < cfg.iters; ++it) {
    TimeSeries next = duhamel_apply(src, r, SourcePart::all, cfg.lin_tol);
    TimeSeries diff = next;
    for (std::size_t k = 0; k < diff.values.size(); ++k) diff.values[k] -= r.values[k];
    const double inc = e_norm(g, diff, cfg.enorm);
    rep.iterates.push_back(e_norm(g, next, cfg.enorm));
    rep.increments.push_back(inc);
    if (it > 0 && prev_inc > 0.0) {
      rep.contraction_ratios.push_back(inc / prev_inc);
      growth = inc > prev_inc ? growth + 1 : 0;
    }
    r = std::move(next);
    prev_inc = inc;
    if (growth >= 3) {
      rep.status = "non_contraction";
      break;
    }
    if (inc == 0.0 || inc <= 1e-14 * rep.iterates.back()) {
      rep.status = "converged";
      break;
    }
  }
  // increments at the solver's roundoff floor carry no contraction information
  double log_sum = 0.0;
  int used = 0;
  for (std::size_t k = 0; k < rep.contraction_ratios.size(); ++k) {
    if (rep.increments[k + 1] <= 1e-9 * rep.iterates[k + 1]) break;
    log_sum += std::log(rep.contraction_ratios[k]);
    ++used;
  }
  rep.measured_ratio = used > 0 ? std::exp(log_sum / used) : 0.0;
  rep.contracting = rep.status != "non_contraction" && rep.measured_ratio < 1.0;

  // J diagnostics at the final iterate
  const double rn = e_norm(g, r, cfg.enorm);
  rep.J0 = e_norm(g, duhamel_apply(src, r, SourcePart::a0, cfg.lin_tol), cfg.enorm);
  if (rn > 0.0) {
    rep.J1 = e_norm(g, duhamel_apply(src, r, SourcePart::a1, cfg.lin_tol), cfg.enorm) / rn;
    rep.J2 = e_norm(g, duhamel_apply(src, r, SourcePart::a2, cfg.lin_tol), cfg.enorm) / (rn * rn);
    rep.J3 = e_norm(g, duhamel_apply(src, r, SourcePart::a3, cfg.lin_tol), cfg.enorm) / (rn * rn * rn);
  }

  Trajectory u;
  u.p = src.params().p;
  for (std::size_t k = 0; k < r.values.size(); ++k) {
    u.times.push_back(r.time(k));
    u.snapshots.push_back({grid, CVec(src.R(r.time(k)).values + r.values[k])});
  }
  rep.final_residual = nls_residual(u);
  for (double x : rep.final_residual) rep.max_residual = std::max(rep.max_residual, x);
  if (rn > 0.0) rep.decay_rate = fit_decay_rate(g, r, cfg.T0, 0.5 * (cfg.T0 + cfg.Tmax));
  out.r = std::move(r);
  return out;
}

double interpolation_slack(const Grid &grid, const CVec &f) {
  const CVec lf = grid.laplacian() * f;
  const double grad2 = -real_inner(grid, lf, f);
  return norm(grid, lf, NormKind::L2) * norm(grid, f, NormKind::L2) - grad2;
}

bool interpolation_check(const Grid &grid, const CVec &f) {
  const double scale = std::max(norm(grid, f, NormKind::H2) * norm(grid, f, NormKind::L2), 1e-300);
  return interpolation_slack(grid, f) >= -1e-14 * scale;
}

} // namespace osl
