// osl: obstacle soliton laboratory
// Copyright (c) 2026 the osl developers

#include "osl/modulation.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <sstream>

namespace osl {

namespace {

constexpr double eps_machine = std::numeric_limits<double>::epsilon();

Vec3 shifted(const Vec3 &c, const Vec3 &y) { return {c[0] + y[0], c[1] + y[1], c[2] + y[2]}; }

double vec_norm(const Vec3 &y, int dim) {
  double s = 0.0;
  for (int ax = 0; ax < dim; ++ax) s += y[ax] * y[ax];
  return std::sqrt(s);
}

// e^{i phi~} per node, phi~ = x.v/2 + phase_offset(t) + mu
CVec phase_vector(const ModulationFrame &f, double t, double mu) {
  const Grid &g = *f.grid;
  const double off = f.params.phase_offset(t) + mu;
  CVec out(g.size());
  for (Index k = 0; k < g.size(); ++k) {
    double xv = 0.0;
    for (int ax = 0; ax < g.dim(); ++ax) xv += g.coord(k, ax) * f.params.v[ax];
    out[k] = std::polar(1.0, 0.5 * xv + off);
  }
  return out;
}

// R~ and the translation directions D_j = d_j Q~ Psi e^{i phi~}
struct Pieces {
  CVec R;
  std::vector<CVec> D;
};

Pieces pieces(const ModulationFrame &f, double t, const Vec3 &y, double mu, bool with_d = true) {
  const Grid &g = *f.grid;
  RVec q;
  std::vector<RVec> dq;
  sample_profile(f.gs, g, shifted(f.params.center(t), y), q, with_d ? &dq : nullptr);
  const CVec ph = phase_vector(f, t, mu);
  Pieces out;
  out.R = (q.cwiseProduct(f.psi.psi)).cast<cplx>().cwiseProduct(ph);
  if (with_d)
    for (int ax = 0; ax < g.dim(); ++ax) out.D.push_back((dq[ax].cwiseProduct(f.psi.psi)).cast<cplx>().cwiseProduct(ph));
  return out;
}

// G_j = Re int (u - R~) conj(D_j), G_last = Im int u conj(R~)
Eigen::VectorXd functionals_at(const ModulationFrame &f, const CVec &u, const Pieces &pc) {
  const Grid &g = *f.grid;
  const int d = g.dim();
  Eigen::VectorXd G(d + 1);
  const CVec r = u - pc.R;
  for (int j = 0; j < d; ++j) G[j] = pc.D[j].dot(r).real() * g.cell_volume();
  G[d] = pc.R.dot(u).imag() * g.cell_volume();
  return G;
}

Eigen::VectorXd functionals_at(const ModulationFrame &f, const CVec &u, double t, const Eigen::VectorXd &x) {
  const int d = f.grid->dim();
  Vec3 y{0.0, 0.0, 0.0};
  for (int j = 0; j < d; ++j) y[j] = x[j];
  return functionals_at(f, u, pieces(f, t, y, x[d]));
}

double im_inner(const Grid &g, const CVec &a, const CVec &b) {
  // Im int a conj(b)
  return b.dot(a).imag() * g.cell_volume();
}

} // namespace

double ModulationFrame::epsilon() const {
  if (eps_mod > 0.0) return eps_mod;
  return 0.1 * std::sqrt(profile_integrals(gs).mass);
}

Field modulated_soliton(const ModulationFrame &f, double t, const Vec3 &y, double mu) {
  return {f.grid, pieces(f, t, y, mu, false).R};
}

Field modulated_mode(const ModulationFrame &f, double t, const Vec3 &y, double mu, int sign) {
  if (sign != 1 && sign != -1) throw PreconditionError("eigenmode sign must be +1 or -1");
  const Grid &g = *f.grid;
  const Vec3 c = shifted(f.params.center(t), y);
  const RVec y1 = sample_mode(f.modes.profile1, g, c);
  const RVec y2 = sample_mode(f.modes.profile2, g, c);
  const CVec ph = phase_vector(f, t, mu);
  Field out = Field::zeros(f.grid);
  for (Index k = 0; k < g.size(); ++k) out.values[k] = cplx(y1[k], sign * y2[k]) * f.psi.psi[k] * ph[k];
  return out;
}

ModulationState decompose(const ModulationFrame &f, const Field &u, double t, const ModulationGuess &guess) {
  const Grid &g = *f.grid;
  if (u.grid.get() != f.grid.get() && u.grid->size() != g.size())
    throw PreconditionError("field and modulation frame live on different grids");
  const int d = g.dim();
  const double eps = f.epsilon();
  const CVec &uv = u.values;

  Eigen::VectorXd x(d + 1);
  for (int j = 0; j < d; ++j) x[j] = guess.y[j];
  x[d] = guess.mu;

  Pieces pc = pieces(f, t, guess.y, guess.mu);
  {
    const double dist = norm(g, CVec(uv - pc.R), NormKind::L2);
    if (dist > eps) {
      std::ostringstream msg;
      msg << "|u - R~|_L2 = " << dist << " exceeds the modulation radius " << eps << " at t = " << t;
      throw PreconditionError(msg.str());
    }
  }

  const double unorm = norm(g, uv, NormKind::L2);
  const double tiny = std::sqrt(std::numeric_limits<double>::min());
  Eigen::MatrixXd J;
  bool have_fd = false;
  ModulationState st;
  for (int it = 0; it < 50; ++it) {
    const Eigen::VectorXd G = functionals_at(f, uv, pc);
    const double rnorm = norm(g, CVec(uv - pc.R), NormKind::L2);
    // residual test: tol |r| |D| plus the quadrature roundoff floor
    bool done = true;
    double worst = 0.0;
    for (int j = 0; j <= d; ++j) {
      const double dn = j < d ? pc.D[j].norm() : pc.R.norm();
      const double scale = dn * std::sqrt(g.cell_volume());
      const double lim = f.newton_tol * rnorm * scale + 64.0 * eps_machine * unorm * scale + tiny;
      worst = std::max(worst, std::abs(G[j]) / std::max(scale, tiny));
      if (std::abs(G[j]) > lim) done = false;
    }
    if (done) {
      st.iterations = it;
      st.orthogonality = worst;
      break;
    }
    if (f.fd_jacobian || it % 5 == 4) {
      // central differences of the full functionals
      J.resize(d + 1, d + 1);
      const double step = 1e-6;
      for (int k = 0; k <= d; ++k) {
        Eigen::VectorXd xp = x, xm = x;
        const double s = k < d ? step / std::sqrt(f.params.omega) : step;
        xp[k] += s;
        xm[k] -= s;
        J.col(k) = (functionals_at(f, uv, t, xp) - functionals_at(f, uv, t, xm)) / (2.0 * s);
      }
      have_fd = true;
    } else if (!have_fd) {
      // leading block: (D_k, D_j) for y, -Re int u conj(R~) for mu
      J = Eigen::MatrixXd::Zero(d + 1, d + 1);
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) J(j, k) = pc.D[j].dot(pc.D[k]).real() * g.cell_volume();
      J(d, d) = -pc.R.dot(uv).real() * g.cell_volume();
    }
    const Eigen::VectorXd dx = J.fullPivLu().solve(-G);
    if (!dx.allFinite()) throw ModulationFailure("singular modulation Jacobian");
    x += dx;
    Vec3 y{0.0, 0.0, 0.0};
    for (int j = 0; j < d; ++j) y[j] = x[j];
    pc = pieces(f, t, y, x[d]);
    if (it == 49) {
      std::ostringstream msg;
      msg << "modulation Newton did not converge in 50 iterations at t = " << t;
      throw ModulationFailure(msg.str());
    }
    // a step at roundoff level means the functionals sit on their floor
    if (dx.norm() <= 4.0 * eps_machine * (1.0 + x.norm())) {
      st.iterations = it + 1;
      st.orthogonality = worst;
      break;
    }
  }
  for (int j = 0; j < d; ++j) st.y[j] = x[j];
  st.mu = x[d];
  st.r = {f.grid, uv - pc.R};
  const Field ym = modulated_mode(f, t, st.y, st.mu, -1);
  const Field yp = modulated_mode(f, t, st.y, st.mu, 1);
  st.alpha_plus = im_inner(g, ym.values, st.r.values);
  st.alpha_minus = im_inner(g, yp.values, st.r.values);
  return st;
}

CVec modulated_h(const ModulationFrame &f, const ModulationState &s, double t) {
  return phase_vector(f, t, s.mu).conjugate().cwiseProduct(s.r.values);
}

Field final_data(const ModulationFrame &f, double Tn, double lambda_plus, double lambda_minus) {
  Field u = soliton_field(f.params, f.gs, Tn, f.grid, &f.psi);
  if (lambda_plus != 0.0)
    u.values += cplx(0.0, lambda_plus) * eigenmode_field(f.params, f.modes, Tn, f.grid, &f.psi, 1).values;
  if (lambda_minus != 0.0)
    u.values += cplx(0.0, lambda_minus) * eigenmode_field(f.params, f.modes, Tn, f.grid, &f.psi, -1).values;
  return u;
}

FinalData solve_modulated_final_data(const ModulationFrame &f, double Tn, double alpha_plus, double tol) {
  const Grid &g = *f.grid;
  FinalData out;
  auto evaluate = [&](double lp, double lm, ModulationState &st, Field &u) {
    u = final_data(f, Tn, lp, lm);
    st = decompose(f, u, Tn);
    return Eigen::Vector2d(st.alpha_plus - alpha_plus, st.alpha_minus);
  };
  if (alpha_plus == 0.0) {
    out.u = final_data(f, Tn, 0.0, 0.0);
    out.state = decompose(f, out.u, Tn);
    out.alpha_plus = out.state.alpha_plus;
    out.alpha_minus = out.state.alpha_minus;
    return out;
  }

  // linear prediction from the profile integrals with the cutoff weight
  const Vec3 c = f.params.center(Tn);
  const RVec y1 = sample_mode(f.modes.profile1, g, c);
  const RVec y2 = sample_mode(f.modes.profile2, g, c);
  const RVec w2 = f.psi.psi.cwiseProduct(f.psi.psi);
  const double a = (y1.cwiseProduct(y1) - y2.cwiseProduct(y2)).dot(w2) * g.cell_volume();
  const double b = (y1.cwiseProduct(y1) + y2.cwiseProduct(y2)).dot(w2) * g.cell_volume();
  Eigen::Matrix2d A;
  A << -a, -b, -b, -a;
  if (std::abs(A.determinant()) < 1e-12 * b * b)
    throw NumericalError("degenerate pairing: Y+ and Y- are numerically dependent");
  Eigen::Vector2d lam = A.fullPivLu().solve(Eigen::Vector2d(alpha_plus, 0.0));

  ModulationState st;
  Field u;
  Eigen::Vector2d F = evaluate(lam[0], lam[1], st, u);
  // finite-difference Jacobian at the prediction, reused (the map is linear up to O(lambda^2))
  Eigen::Matrix2d J;
  const double s = 1e-3 * lam.norm();
  for (int k = 0; k < 2; ++k) {
    Eigen::Vector2d lp = lam, lm = lam;
    lp[k] += s;
    lm[k] -= s;
    ModulationState tmp;
    Field tu;
    J.col(k) = (evaluate(lp[0], lp[1], tmp, tu) - evaluate(lm[0], lm[1], tmp, tu)) / (2.0 * s);
  }
  const Eigen::FullPivLU<Eigen::Matrix2d> lu(J);
  if (!lu.isInvertible()) throw NumericalError("degenerate pairing: singular final-data Jacobian");
  int it = 0;
  const double target = tol * std::abs(alpha_plus);
  for (; it < 30 && F.cwiseAbs().maxCoeff() > target; ++it) {
    const Eigen::Vector2d next = lam - lu.solve(F);
    ModulationState st2;
    Field u2;
    const Eigen::Vector2d F2 = evaluate(next[0], next[1], st2, u2);
    // stop on the decomposition's own floor
    if (F2.cwiseAbs().maxCoeff() >= F.cwiseAbs().maxCoeff()) break;
    lam = next;
    F = F2;
    st = std::move(st2);
    u = std::move(u2);
  }
  if (F.cwiseAbs().maxCoeff() > std::max(target, 1e-8 * std::abs(alpha_plus))) {
    std::ostringstream msg;
    msg << "final-data Newton stalled with residual " << F.cwiseAbs().maxCoeff();
    throw NumericalError(msg.str());
  }
  out.lambda_plus = lam[0];
  out.lambda_minus = lam[1];
  out.alpha_plus = st.alpha_plus;
  out.alpha_minus = st.alpha_minus;
  out.ratio = lam.norm() / std::abs(alpha_plus);
  out.iterations = it;
  out.u = std::move(u);
  out.state = std::move(st);
  return out;
}

std::string to_string(ExitReason r) {
  switch (r) {
  case ExitReason::reached_T0: return "reached_T0";
  case ExitReason::r_bound: return "r_bound";
  case ExitReason::y_mu_bound: return "y_mu_bound";
  case ExitReason::alpha_bound: return "alpha_bound";
  case ExitReason::modulation_failure: return "modulation_failure";
  }
  return "unknown";
}

double ShootLog::exit_sign() const {
  if (rows.empty()) return 0.0;
  const double a = rows.back().alpha_plus;
  return a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0);
}

ShootConfig resolve_shoot_config(const ModulationFrame &f, const ShootConfig &cfg) {
  if (!(cfg.Tn > cfg.T0 && cfg.T0 > 0.0)) throw PreconditionError("shoot needs Tn > T0 > 0");
  if (cfg.M < 0.0 || cfg.Mprime < 0.0) throw PreconditionError("M and M' must be positive");
  if (cfg.log_every < 1) throw PreconditionError("log_every must be at least 1");
  if (!(f.params.speed() > 0.0)) throw PreconditionError("shoot needs a moving soliton");
  ShootConfig out = cfg;
  if (out.delta <= 0.0) out.delta = 0.8 * (f.gs.delta_fit > 0.0 ? f.gs.delta_fit : 1.0);
  const double rate = out.delta * std::sqrt(f.params.omega) * f.params.speed();
  if (out.M == 0.0) {
    // sized on the bracket edge; alpha+ = 0 would give r = 0
    const double edge = std::exp(-rate * cfg.Tn);
    const FinalData fd = solve_modulated_final_data(f, cfg.Tn, edge);
    const double rn = norm(fd.state.r, NormKind::H1);
    out.M = 10.0 * std::max(rn * std::exp(rate * cfg.Tn), 1.0);
  }
  if (out.Mprime == 0.0) out.Mprime = out.M * out.M;
  return out;
}

ShootLog backward_shoot(const ModulationFrame &f, double alpha_plus, const ShootConfig &cfg_in,
                        const EvolveConfig &ecfg_in) {
  const ShootConfig cfg = resolve_shoot_config(f, cfg_in);
  const int d = f.grid->dim();
  ShootLog log;
  log.alpha_target = alpha_plus;
  log.M = cfg.M;
  log.Mprime = cfg.Mprime;
  log.delta = cfg.delta;
  log.rate = cfg.delta * std::sqrt(f.params.omega) * f.params.speed();
  const double bound_edge = std::exp(-log.rate * cfg.Tn);
  if (std::abs(alpha_plus) > bound_edge * (1.0 + 1e-12))
    throw PreconditionError("|alpha+| exceeds e^{-delta sqrt(omega)|v| Tn}");

  const FinalData fd = solve_modulated_final_data(f, cfg.Tn, alpha_plus);
  log.lambda_plus = fd.lambda_plus;
  log.lambda_minus = fd.lambda_minus;

  EvolveConfig ecfg = ecfg_in;
  ecfg.t0 = cfg.Tn;
  ecfg.t1 = cfg.T0;
  ecfg.snapshot_every = cfg.log_every;
  ecfg.reference = f.params;

  ModulationGuess guess{fd.state.y, fd.state.mu};
  bool exited = false;
  auto hook = [&](double t, const Field &u) -> bool {
    const double env = std::exp(-log.rate * t);
    ModulationState st;
    try {
      st = decompose(f, u, t, guess);
    } catch (const std::exception &e) {
      log.exit_reason = ExitReason::modulation_failure;
      log.exit_time = t;
      log.detail = e.what();
      exited = true;
      return false;
    }
    guess = {st.y, st.mu};
    ShootRow row;
    row.t = t;
    row.r_l2 = norm(st.r, NormKind::L2);
    row.r_h1 = norm(st.r, NormKind::H1);
    row.y = st.y;
    row.y_abs = vec_norm(st.y, d);
    row.mu = st.mu;
    row.alpha_plus = st.alpha_plus;
    row.alpha_minus = st.alpha_minus;
    row.lyapunov = functionals(modulated_soliton(f, t, st.y, st.mu), f.params).lyapunov;
    row.lyapunov_u = functionals(u, f.params).lyapunov;
    row.N = std::pow(std::exp(log.rate * t) * st.alpha_plus, 2);
    Field diff = u;
    diff.values -= soliton_field(f.params, f.gs, t, f.grid, &f.psi).values;
    row.dist_h1 = norm(diff, NormKind::H1);
    log.rows.push_back(row);
    if (cfg.keep_snapshots) log.snapshots.push_back(u);

    const double slack = 1.0 + 1e-9;
    ExitReason why = ExitReason::reached_T0;
    if (row.r_h1 > slack * cfg.M * env) why = ExitReason::r_bound;
    else if (row.y_abs > slack * cfg.Mprime * env || std::abs(row.mu) > slack * cfg.Mprime * env)
      why = ExitReason::y_mu_bound;
    else if (std::abs(row.alpha_plus) > slack * env || std::abs(row.alpha_minus) > slack * env)
      why = ExitReason::alpha_bound;
    if (why != ExitReason::reached_T0) {
      log.exit_reason = why;
      log.exit_time = t;
      exited = true;
      return false;
    }
    return true;
  };

  try {
    evolve(fd.u, ecfg, f.params.p, hook);
  } catch (const NumericalError &e) {
    if (!exited) {
      log.exit_reason = ExitReason::modulation_failure;
      log.exit_time = log.rows.empty() ? cfg.Tn : log.rows.back().t;
      log.detail = e.what();
      exited = true;
    }
  }
  if (!exited) {
    log.exit_reason = ExitReason::reached_T0;
    log.exit_time = cfg.T0;
  }
  return log;
}

SearchResult shoot_search(const ModulationFrame &f, const ShootConfig &cfg_in, const EvolveConfig &ecfg,
                          int max_bisections) {
  SearchResult out;
  out.config = resolve_shoot_config(f, cfg_in);
  const ShootConfig &cfg = out.config;
  const double rate = cfg.delta * std::sqrt(f.params.omega) * f.params.speed();
  const double edge = std::exp(-rate * cfg.Tn);

  // the two bracket ends are independent shoots
  ShootConfig lean = cfg;
  lean.keep_snapshots = false;
  auto lo_future = std::async(std::launch::async, [&] { return backward_shoot(f, -edge, lean, ecfg); });
  ShootLog hi_log = backward_shoot(f, edge, lean, ecfg);
  ShootLog lo_log = lo_future.get();
  if (lo_log.exit_reason != ExitReason::alpha_bound || hi_log.exit_reason != ExitReason::alpha_bound ||
      lo_log.exit_sign() * hi_log.exit_sign() >= 0.0) {
    std::ostringstream msg;
    msg << "no unstable crossing detected: bracket ends exit by " << to_string(lo_log.exit_reason) << " (sign "
        << lo_log.exit_sign() << ") and " << to_string(hi_log.exit_reason) << " (sign " << hi_log.exit_sign()
        << ")";
    throw NumericalError(msg.str());
  }

  double lo = -edge, hi = edge;
  const double s_lo = lo_log.exit_sign();
  ShootLog best = lo_log.exit_time <= hi_log.exit_time ? lo_log : hi_log;
  double best_alpha = lo_log.exit_time <= hi_log.exit_time ? lo : hi;
  int it = 0;
  for (; it < max_bisections && hi - lo >= 1e-14 * edge; ++it) {
    const double mid = 0.5 * (lo + hi);
    ShootLog m = backward_shoot(f, mid, lean, ecfg);
    if (m.exit_time <= best.exit_time) {
      best = m;
      best_alpha = mid;
    }
    if (m.exit_reason == ExitReason::reached_T0) break;
    const double s = m.exit_sign();
    if (s == 0.0) break;
    if (s == s_lo) lo = mid;
    else hi = mid;
  }
  out.lo = lo;
  out.hi = hi;
  out.bisections = it;
  out.alpha_star = best_alpha;
  // rerun the winner with snapshots for the diagnostics
  out.log = cfg.keep_snapshots ? backward_shoot(f, best_alpha, cfg, ecfg) : std::move(best);
  return out;
}

double alpha_minus_monitor(const ShootLog &log) {
  double worst = 0.0;
  for (const ShootRow &row : log.rows)
    worst = std::max(worst, std::abs(row.alpha_minus) / (0.5 * std::exp(-log.rate * row.t)));
  return worst;
}

namespace {

struct LineFit {
  double slope = 0.0, intercept = 0.0, r2 = 0.0;
};

LineFit least_squares(const std::vector<double> &x, const std::vector<double> &y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
    syy += (y[k] - my) * (y[k] - my);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  return f;
}

} // namespace

double fit_alpha_growth(const ShootLog &a, const ShootLog &b, double floor, double ceiling_fraction) {
  std::vector<double> t, ld;
  const std::size_t n = std::min(a.rows.size(), b.rows.size());
  for (std::size_t k = 0; k < n; ++k) {
    if (std::abs(a.rows[k].t - b.rows[k].t) > 1e-9) throw PreconditionError("logs sampled at different times");
    const double diff = std::abs(a.rows[k].alpha_plus - b.rows[k].alpha_plus);
    if (diff <= floor || diff >= ceiling_fraction * std::exp(-a.rate * a.rows[k].t)) continue;
    t.push_back(a.rows[k].t);
    ld.push_back(std::log(diff));
  }
  if (t.size() < 3) throw NumericalError("too few rows in the linear regime to fit a growth rate");
  return -least_squares(t, ld).slope;
}

ExpFit fit_envelope(const std::vector<double> &t, const std::vector<double> &value, double rate) {
  ExpFit out;
  std::vector<double> x, y;
  for (std::size_t k = 0; k < t.size(); ++k) {
    out.C = std::max(out.C, value[k] * std::exp(rate * t[k]));
    if (value[k] > 0.0) {
      x.push_back(t[k]);
      y.push_back(std::log(value[k]));
    }
  }
  out.samples = static_cast<int>(x.size());
  if (x.size() >= 3) {
    const LineFit lf = least_squares(x, y);
    out.slope = lf.slope;
    out.r_squared = lf.r2;
  }
  return out;
}

void lyapunov_drift(const ShootLog &log, double floor, std::vector<double> &t, std::vector<double> &rate) {
  t.clear();
  rate.clear();
  for (std::size_t k = 1; k + 1 < log.rows.size(); ++k) {
    const double dl = log.rows[k + 1].lyapunov - log.rows[k - 1].lyapunov;
    if (std::abs(dl) <= floor) continue;
    t.push_back(log.rows[k].t);
    rate.push_back(std::abs(dl / (log.rows[k + 1].t - log.rows[k - 1].t)));
  }
}

CoercivityRow coercivity_at(const ModulationFrame &f, const ModulationState &s, double t, double M, double rate,
                            bool drop_alpha) {
  const Grid &g = *f.grid;
  CoercivityRow row;
  row.t = t;
  const CVec h = modulated_h(f, s, t);
  const RVec h1 = h.real(), h2 = h.imag();
  RVec q;
  sample_profile(f.gs, g, shifted(f.params.center(t), s.y), q);
  const RVec pot = q.array().pow(f.params.p - 1.0).matrix();
  const SpMat &lap = g.laplacian();
  const double cell = g.cell_volume();
  const double k1 = -h1.dot(lap * h1) * cell, k2 = -h2.dot(lap * h2) * cell;
  const double m1 = h1.squaredNorm() * cell, m2 = h2.squaredNorm() * cell;
  const double p1 = h1.cwiseProduct(h1).dot(pot) * cell, p2 = h2.cwiseProduct(h2).dot(pot) * cell;
  row.phi = k1 + k2 + f.params.omega * (m1 + m2) - f.params.p * p1 - p2;
  row.h_norm2 = k1 + k2 + m1 + m2;
  row.alpha2 = s.alpha_plus * s.alpha_plus + s.alpha_minus * s.alpha_minus;
  row.cutoff = M * M * std::exp(-4.0 * rate * t);
  row.margin = drop_alpha ? row.phi : row.phi + row.alpha2 + row.cutoff;
  row.C = row.margin > 0.0 ? row.h_norm2 / row.margin : std::numeric_limits<double>::infinity();
  if (row.h_norm2 == 0.0 && row.margin == 0.0) row.C = 0.0;
  return row;
}

std::vector<CoercivityRow> coercivity_along_trajectory(const ModulationFrame &f, const ShootLog &log,
                                                       bool drop_alpha) {
  if (log.snapshots.size() != log.rows.size()) throw PreconditionError("coercivity needs the logged snapshots");
  std::vector<CoercivityRow> out;
  for (std::size_t k = 0; k < log.rows.size(); ++k) {
    const ShootRow &row = log.rows[k];
    ModulationState s;
    s.y = row.y;
    s.mu = row.mu;
    s.alpha_plus = row.alpha_plus;
    s.alpha_minus = row.alpha_minus;
    s.r = log.snapshots[k];
    s.r.values -= modulated_soliton(f, row.t, row.y, row.mu).values;
    out.push_back(coercivity_at(f, s, row.t, log.M, log.rate, drop_alpha));
  }
  return out;
}

} // namespace osl
