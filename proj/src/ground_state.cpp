// osl: obstacle soliton laboratory
// Copyright (c) 2026 the osl developers

#include "osl/ground_state.hpp"
#include "osl/error.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace osl {

namespace odeint = boost::numeric::odeint;

namespace {

using State = std::array<double, 2>;

struct RadialOde {
  double p, omega;
  int dim;
  void operator()(const State &y, State &dy, double r) const {
    const double nl = std::pow(std::abs(y[0]), p - 1.0) * y[0];
    dy[0] = y[1];
    // axis regularization: (d-1)/r Q' -> (d-1) Q''(0)
    if (r <= 0.0)
      dy[1] = (omega * y[0] - nl) / dim;
    else
      dy[1] = -(dim - 1) / r * y[1] + omega * y[0] - nl;
  }
};

enum class Branch { crosses, turns_up };

auto make_stepper(double q0) {
  return odeint::make_dense_output(1e-15 * q0, 1e-13, odeint::runge_kutta_dopri5<State>());
}

Branch classify(double q0, double p, double omega, int dim, double r_end) {
  RadialOde ode{p, omega, dim};
  auto stepper = make_stepper(q0);
  stepper.initialize(State{q0, 0.0}, 0.0, 1e-3 / std::sqrt(omega));
  while (stepper.current_time() < r_end) {
    stepper.do_step(ode);
    const State &y = stepper.current_state();
    if (y[0] < 0.0) return Branch::crosses;
    if (y[1] > 0.0) return Branch::turns_up;
  }
  return Branch::turns_up;
}

// Decaying and growing solutions of Q'' + (d-1)/r Q' - omega Q = 0 with
// their derivatives.
struct TailBasis {
  double k, kp, g, gp;
};

TailBasis tail_basis(int dim, double omega, double r) {
  const double s = std::sqrt(omega);
  if (dim == 1) return {std::exp(-s * r), -s * std::exp(-s * r), std::exp(s * r), s * std::exp(s * r)};
  if (dim == 3) {
    const double em = std::exp(-s * r) / r, ep = std::exp(s * r) / r;
    return {em, -em * (s + 1.0 / r), ep, ep * (s - 1.0 / r)};
  }
  const double z = s * r;
  return {std::cyl_bessel_k(0.0, z), -s * std::cyl_bessel_k(1.0, z), std::cyl_bessel_i(0.0, z),
          s * std::cyl_bessel_i(1.0, z)};
}

double decaying_value(int dim, double omega, double r, double &deriv) {
  const TailBasis b = tail_basis(dim, omega, r);
  deriv = b.kp;
  return b.k;
}

void fill_second_derivative(GroundState &gs) {
  gs.d2q.resize(gs.r.size());
  for (std::size_t k = 0; k < gs.r.size(); ++k) {
    const double nl = std::pow(gs.q[k], gs.p);
    if (k == 0)
      gs.d2q[k] = (gs.omega * gs.q[k] - nl) / gs.dim;
    else
      gs.d2q[k] = -(gs.dim - 1) / gs.r[k] * gs.dq[k] + gs.omega * gs.q[k] - nl;
  }
}

} // namespace

double GroundState::value(double radius) const {
  radius = std::abs(radius);
  if (r.empty() || radius >= r.back()) return 0.0;
  const std::size_t k = std::min(static_cast<std::size_t>(radius / dr), r.size() - 2);
  const double t = (radius - r[k]) / dr;
  const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
  const double h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
  const double h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
  const double h2 = 0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5;
  const double h3 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
  const double h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
  const double h5 = 0.5 * t3 - t4 + 0.5 * t5;
  return q[k] * h0 + dr * dq[k] * h1 + dr * dr * d2q[k] * h2 + q[k + 1] * h3 + dr * dq[k + 1] * h4 +
         dr * dr * d2q[k + 1] * h5;
}

double GroundState::derivative(double radius) const {
  radius = std::abs(radius);
  if (r.empty() || radius >= r.back()) return 0.0;
  const std::size_t k = std::min(static_cast<std::size_t>(radius / dr), r.size() - 2);
  const double t = (radius - r[k]) / dr;
  const double t2 = t * t, t3 = t2 * t, t4 = t3 * t;
  const double h0 = -30.0 * t2 + 60.0 * t3 - 30.0 * t4;
  const double h1 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
  const double h2 = t - 4.5 * t2 + 6.0 * t3 - 2.5 * t4;
  const double h3 = -h0;
  const double h4 = -12.0 * t2 + 28.0 * t3 - 15.0 * t4;
  const double h5 = 1.5 * t2 - 4.0 * t3 + 2.5 * t4;
  return (q[k] * h0 + q[k + 1] * h3) / dr + dq[k] * h1 + dr * d2q[k] * h2 + dq[k + 1] * h4 +
         dr * d2q[k + 1] * h5;
}

GroundState solve_ground_state(double p, double omega, int dim, double tol) {
  if (!(p > 1.0)) throw PreconditionError("ground state needs p > 1");
  if (!(omega > 0.0)) throw PreconditionError("ground state needs omega > 0");
  if (!(tol > 0.0)) throw PreconditionError("ground state needs tol > 0");
  if (dim < 1 || dim > 3) throw PreconditionError("dim must be 1, 2 or 3");

  const double scale = std::pow(omega, 1.0 / (p - 1.0));
  const double r_end = 120.0 / std::sqrt(omega);
  double lo = scale, hi = 3.0 * scale * dim;
  if (classify(lo, p, omega, dim, r_end) != Branch::turns_up ||
      classify(hi, p, omega, dim, r_end) != Branch::crosses) {
    std::ostringstream msg;
    msg << "ground-state bracket [" << lo << ", " << hi << "] does not straddle the separatrix";
    throw NumericalError(msg.str());
  }
  int it = 0;
  for (; it < 200 && hi - lo > tol * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (classify(mid, p, omega, dim, r_end) == Branch::crosses ? hi : lo) = mid;
  }
  if (hi - lo > std::max(tol * hi, 4.0 * std::numeric_limits<double>::epsilon() * hi)) {
    std::ostringstream msg;
    msg << "ground-state bisection stalled at bracket [" << lo << ", " << hi << "] after " << it << " steps";
    throw NumericalError(msg.str());
  }

  GroundState gs;
  gs.p = p;
  gs.omega = omega;
  gs.dim = dim;
  gs.q0 = 0.5 * (lo + hi);
  gs.dr = 0.0025 / std::sqrt(omega);

  // integrate the separatrix until Q drops below 1e-4 Q(0); every step
  // lands on a sample so no dense-output interpolation enters the profile
  RadialOde ode{p, omega, dim};
  auto controlled = odeint::make_controlled(1e-15 * gs.q0, 1e-13, odeint::runge_kutta_dopri5<State>());
  State y{gs.q0, 0.0};
  double r_at = 0.0, dt_try = 1e-3 / std::sqrt(omega);
  auto advance = [&](double to) {
    if (to > r_at) odeint::integrate_adaptive(controlled, ode, y, r_at, to, std::min(dt_try, to - r_at));
    r_at = to;
  };
  for (std::size_t k = 0;; ++k) {
    const double rk = k * gs.dr;
    advance(rk);
    if (k > 0 && (y[0] <= 0.0 || y[1] >= 0.0))
      throw NumericalError("ground-state profile left the separatrix before reaching its tail");
    gs.r.push_back(rk);
    gs.q.push_back(y[0]);
    gs.dq.push_back(y[1]);
    if (y[0] < 1e-4 * gs.q0) break;
    if (rk > r_end) throw NumericalError("ground-state profile does not decay");
  }

  // Decaying linear tail matched to (Q, Q') at the switch radius.  The
  // integration runs on over a window where the two are blended smoothly;
  // a hard switch leaves a small jump from the residual growing component.
  const std::size_t kc = gs.r.size() - 1;
  const double rc = gs.r.back(), width = 2.0 / std::sqrt(omega);
  const TailBasis b = tail_basis(dim, omega, rc);
  const double amp = (gs.q.back() * b.gp - gs.dq.back() * b.g) / (b.k * b.gp - b.kp * b.g);
  for (std::size_t k = kc + 1;; ++k) {
    const double rk = k * gs.dr;
    double dk = 0.0;
    const double qt = amp * decaying_value(dim, omega, rk, dk), dqt = amp * dk;
    double qk = qt, dqk = dqt;
    if (rk < rc + width) {
      advance(rk);
      const double t = (rk - rc) / width;
      const double w = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
      const double dw = 30.0 * t * t * (1.0 - t) * (1.0 - t) / width;
      qk = (1.0 - w) * y[0] + w * qt;
      dqk = (1.0 - w) * y[1] + w * dqt + dw * (qt - y[0]);
    }
    gs.r.push_back(rk);
    gs.q.push_back(qk);
    gs.dq.push_back(dqk);
    if (rk >= rc + width && qk < 1e-17 * gs.q0) break;
  }
  fill_second_derivative(gs);
  gs.residual = ode_residual(gs);
  gs.delta_fit = fit_decay(gs);
  return gs;
}

double ode_residual(const GroundState &gs) {
  const std::size_t n = gs.r.size();
  auto dq = [&](long k) { return k < 0 ? -gs.dq[-k] : gs.dq[k]; };
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k + 2 < n; ++k) {
    const long i = static_cast<long>(k);
    const double q2 = (-dq(i + 2) + 8.0 * dq(i + 1) - 8.0 * dq(i - 1) + dq(i - 2)) / (12.0 * gs.dr);
    const double lap = k == 0 ? gs.dim * q2 : q2 + (gs.dim - 1) / gs.r[k] * gs.dq[k];
    const double nl = std::pow(gs.q[k], gs.p);
    const double res = -lap + gs.omega * gs.q[k] - nl;
    const double w = k == 0 ? 0.5 * (gs.dim == 1 ? 1.0 : 0.0) : std::pow(gs.r[k], gs.dim - 1);
    num += w * res * res;
    den += w * nl * nl;
  }
  return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

GroundState rescale(const GroundState &gs, double omega) {
  if (!(omega > 0.0)) throw PreconditionError("rescale needs omega > 0");
  if (gs.omega != 1.0) throw PreconditionError("rescale expects an omega = 1 ground state");
  GroundState out = gs;
  const double s = std::pow(omega, 1.0 / (gs.p - 1.0));
  const double root = std::sqrt(omega);
  out.omega = omega;
  out.dr = gs.dr / root;
  out.q0 = gs.q0 * s;
  for (std::size_t k = 0; k < gs.r.size(); ++k) {
    out.r[k] = gs.r[k] / root;
    out.q[k] = gs.q[k] * s;
    out.dq[k] = gs.dq[k] * s * root;
    out.d2q[k] = gs.d2q[k] * s * omega;
  }
  out.residual = ode_residual(out);
  return out;
}

double fit_decay(const GroundState &gs) {
  if (gs.q.empty() || gs.q.back() > 1e-6 * gs.q0) throw PreconditionError("ground-state tail too short for a decay fit");
  const double r_lo = gs.r.back() * 2.0 / 3.0;
  const double root = std::sqrt(gs.omega);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t k = 0; k < gs.r.size(); ++k) {
    if (gs.r[k] < r_lo || gs.q[k] <= 0.0) continue;
    const double x = root * gs.r[k], yv = std::log(gs.q[k]);
    sx += x;
    sy += yv;
    sxx += x * x;
    sxy += x * yv;
    ++m;
  }
  if (m < 8) throw PreconditionError("ground-state tail too short for a decay fit");
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return -slope;
}

void sample_profile(const GroundState &gs, const Grid &grid, const Vec3 &center, RVec &q, std::vector<RVec> *grad) {
  q.resize(grid.size());
  if (grad) grad->assign(grid.dim(), RVec::Zero(grid.size()));
  for (Index k = 0; k < grid.size(); ++k) {
    double r2 = 0.0;
    Vec3 dx{0, 0, 0};
    for (int ax = 0; ax < grid.dim(); ++ax) {
      dx[ax] = grid.coord(k, ax) - center[ax];
      r2 += dx[ax] * dx[ax];
    }
    const double r = std::sqrt(r2);
    q[k] = gs.value(r);
    if (grad && r > 0.0) {
      const double d = gs.derivative(r);
      for (int ax = 0; ax < grid.dim(); ++ax) (*grad)[ax][k] = d * dx[ax] / r;
    }
  }
}

Field sample_on_grid(const GroundState &gs, const GridPtr &grid, const Vec3 &center) {
  RVec q;
  sample_profile(gs, *grid, center, q);
  return {grid, q.cast<cplx>()};
}

double q0_closed_form_1d(double p, double omega) {
  return std::pow(omega, 1.0 / (p - 1.0)) * std::pow(0.5 * (p + 1.0), 1.0 / (p - 1.0));
}

double q_closed_form_1d(double p, double omega, double x) {
  const double arg = 0.5 * (p - 1.0) * std::sqrt(omega) * x;
  return q0_closed_form_1d(p, omega) * std::pow(1.0 / std::cosh(arg), 2.0 / (p - 1.0));
}

} // namespace osl
