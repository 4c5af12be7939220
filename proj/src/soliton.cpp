// osl: obstacle soliton laboratory
// Copyright (c) 2026 the osl developers

#include "osl/soliton.hpp"
#include "osl/error.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace osl {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

double dot_xv(const Grid &g, Index k, const Vec3 &v) {
  double s = 0.0;
  for (int ax = 0; ax < g.dim(); ++ax) s += g.coord(k, ax) * v[ax];
  return s;
}

double sphere_area(int dim) {
  if (dim == 1) return 2.0;
  if (dim == 2) return two_pi;
  return 2.0 * two_pi;
}

} // namespace

double SolitonParams::speed() const { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

Vec3 SolitonParams::center(double t) const { return {x0[0] + t * v[0], x0[1] + t * v[1], x0[2] + t * v[2]}; }

double SolitonParams::phase_offset(double t) const {
  const double v2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
  // reduce each large product separately before adding
  return std::remainder(omega * t, two_pi) + std::remainder(-0.25 * v2 * t, two_pi) + theta0;
}

void check_center(const SolitonParams &params, const Grid &grid, double t, double margin) {
  if (!(params.omega > 0.0)) throw PreconditionError("soliton needs omega > 0");
  const Vec3 c = params.center(t);
  for (int ax = 0; ax < grid.dim(); ++ax)
    if (std::abs(c[ax]) + margin > grid.L()) {
      std::ostringstream msg;
      msg << "soliton center " << c[ax] << " at t = " << t << " is within " << margin << " of the box edge "
          << grid.L();
      throw PreconditionError(msg.str());
    }
}

Field soliton_field(const SolitonParams &params, const GroundState &gs, double t, const GridPtr &grid,
                    const CutoffPsi *psi) {
  if (std::abs(gs.omega - params.omega) > 1e-12 * params.omega)
    throw PreconditionError("ground state frequency differs from the soliton frequency");
  const double delta = gs.delta_fit > 0.0 ? gs.delta_fit : 1.0;
  check_center(params, *grid, t, 10.0 / (delta * std::sqrt(params.omega)));
  RVec q;
  sample_profile(gs, *grid, params.center(t), q);
  const RVec w = psi_or_one(*grid, psi);
  const double off = params.phase_offset(t);
  Field out = Field::zeros(grid);
  for (Index k = 0; k < grid->size(); ++k)
    out.values[k] = q[k] * w[k] * std::polar(1.0, 0.5 * dot_xv(*grid, k, params.v) + off);
  return out;
}

Field eigenmode_field(const SolitonParams &params, const EigenModes &modes, double t, const GridPtr &grid,
                      const CutoffPsi *psi, int sign) {
  if (sign != 1 && sign != -1) throw PreconditionError("eigenmode sign must be +1 or -1");
  if (std::abs(modes.omega - params.omega) > 1e-12 * params.omega)
    throw PreconditionError("modes are at a different frequency than the soliton");
  check_center(params, *grid, t, 10.0 / std::sqrt(params.omega));
  const Vec3 c = params.center(t);
  const RVec y1 = sample_mode(modes.profile1, *grid, c);
  const RVec y2 = sample_mode(modes.profile2, *grid, c);
  const RVec w = psi_or_one(*grid, psi);
  const double off = params.phase_offset(t);
  Field out = Field::zeros(grid);
  for (Index k = 0; k < grid->size(); ++k)
    out.values[k] = cplx(y1[k], sign * y2[k]) * w[k] * std::polar(1.0, 0.5 * dot_xv(*grid, k, params.v) + off);
  return out;
}

Functionals functionals(const Field &u, const SolitonParams &params, int order) {
  const Grid &g = *u.grid;
  Functionals f;
  f.mass = real_inner(g, u.values, u.values);
  if (f.mass == 0.0) return f;
  const SpMat lap = order == 2 ? g.laplacian() : laplacian_matrix(g, order);
  const double kinetic = -real_inner(g, CVec(lap * u.values), u.values);
  double pot = 0.0;
  for (Index k = 0; k < g.size(); ++k) pot += std::pow(std::abs(u.values[k]), params.p + 1.0);
  pot *= g.cell_volume();
  f.energy = 0.5 * kinetic - pot / (params.p + 1.0);
  const std::vector<SpMat> grad = gradient_matrices(g, order);
  double vp = 0.0;
  for (int ax = 0; ax < g.dim(); ++ax) {
    const CVec du = grad[ax] * u.values;
    f.momentum[ax] = u.values.dot(du).imag() * g.cell_volume(); // dot conjugates the left factor
    vp += params.v[ax] * f.momentum[ax];
  }
  const double v2 = params.v[0] * params.v[0] + params.v[1] * params.v[1] + params.v[2] * params.v[2];
  f.lyapunov = f.energy + (0.5 * params.omega + 0.125 * v2) * f.mass - 0.5 * vp;
  return f;
}

ProfileIntegrals profile_integrals(const GroundState &gs) {
  // composite Simpson in r with the sphere measure; the tail past the last
  // even panel is below 1e-17 Q(0) and dropped
  const std::size_t n = gs.r.size() - ((gs.r.size() - 1) % 2);
  ProfileIntegrals out;
  for (std::size_t k = 0; k < n; ++k) {
    const double w = (k == 0 || k + 1 == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    const double jac = std::pow(gs.r[k], gs.dim - 1);
    out.mass += w * jac * gs.q[k] * gs.q[k];
    out.grad2 += w * jac * gs.dq[k] * gs.dq[k];
    out.power += w * jac * std::pow(gs.q[k], gs.p + 1.0);
  }
  const double c = sphere_area(gs.dim) * gs.dr / 3.0;
  out.mass *= c;
  out.grad2 *= c;
  out.power *= c;
  out.energy = 0.5 * out.grad2 - out.power / (gs.p + 1.0);
  return out;
}

double threshold_exponent(double p) {
  if (!(p > 1.0)) throw PreconditionError("threshold exponent needs p > 1");
  return (3.0 * p - 7.0) / (2.0 * (p - 1.0));
}

double threshold_exponent(long num, long den) {
  if (den <= 0 || num <= den) throw PreconditionError("threshold exponent needs p = num/den > 1");
  return static_cast<double>(3 * num - 7 * den) / static_cast<double>(2 * (num - den));
}

ThresholdReport threshold_report(const Field &u, double p, const GroundState &gs) {
  if (std::abs(gs.p - p) > 1e-12) throw PreconditionError("ground state exponent differs from p");
  ThresholdReport t;
  t.s = threshold_exponent(p);
  t.outside_range = !(p > 7.0 / 3.0 && p < 5.0);
  SolitonParams bare;
  bare.p = p;
  const Functionals f = functionals(u, bare);
  t.mass = f.mass;
  t.energy = f.energy;
  t.grad_norm = norm(*u.grid, u.values, NormKind::H1);
  t.grad_norm = std::sqrt(std::max(t.grad_norm * t.grad_norm - f.mass, 0.0));
  auto signed_pow = [](double x, double e) { return std::copysign(std::pow(std::abs(x), e), x); };
  t.scale_inv_grad = std::pow(std::sqrt(f.mass), 1.0 - t.s) * std::pow(t.grad_norm, t.s);
  t.scale_inv_me = std::pow(f.mass, 1.0 - t.s) * signed_pow(f.energy, t.s);
  const ProfileIntegrals q = profile_integrals(gs);
  t.q_scale_inv_grad = std::pow(std::sqrt(q.mass), 1.0 - t.s) * std::pow(std::sqrt(q.grad2), t.s);
  t.q_scale_inv_me = std::pow(q.mass, 1.0 - t.s) * signed_pow(q.energy, t.s);
  return t;
}

Field galilean_boost(const Field &u, const Vec3 &v, double t) {
  const Grid &g = *u.grid;
  std::array<int, 3> shift{0, 0, 0};
  for (int ax = 0; ax < g.dim(); ++ax) shift[ax] = static_cast<int>(std::lround(v[ax] * t / g.h()));
  const double v2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
  const double off = std::remainder(-0.25 * v2 * t, two_pi);
  Field out = Field::zeros(u.grid);
  double lost = 0.0, total = 0.0;
  for (Index k = 0; k < g.size(); ++k) {
    const double m = std::norm(u.values[k]);
    total += m;
    if (m == 0.0) continue;
    const auto &s = g.lattice(k);
    const Index dst = g.active_at(s[0] + shift[0], g.dim() > 1 ? s[1] + shift[1] : 0, g.dim() > 2 ? s[2] + shift[2] : 0);
    if (dst < 0) {
      lost += m;
      continue;
    }
    out.values[dst] = u.values[k] * std::polar(1.0, 0.5 * dot_xv(g, dst, v) + off);
  }
  if (lost > 1e-14 * total) {
    std::ostringstream msg;
    msg << "boost shift moves a fraction " << lost / total << " of the mass off the active nodes";
    throw PreconditionError(msg.str());
  }
  return out;
}

} // namespace osl
