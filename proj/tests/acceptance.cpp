// osl: obstacle soliton laboratory
// Copyright (c) 2026 the osl developers

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include "osl/config.hpp"
#include "osl/evolve.hpp"
#include "osl/fixedpoint.hpp"
#include "osl/linearized.hpp"
#include "osl/modulation.hpp"
#include "osl/run.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

using namespace osl;
using nlohmann::json;

namespace {

int failures = 0;

void report(int id, const std::string &name, bool ok, const std::string &detail) {
  std::printf("%s %2d %s: %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

// runs one criterion, turning an escaped exception into a FAIL line
void criterion(int id, const std::string &name, const std::function<std::pair<bool, std::string>()> &body) {
  try {
    const auto [ok, detail] = body();
    report(id, name, ok, detail);
  } catch (const std::exception &e) {
    report(id, name, false, std::string("exception: ") + e.what());
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char *f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char *f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

json run_json(const std::string &command, const ExperimentConfig &c) {
  const RunOutput out = run(command, c, false);
  if (out.exit_code != 0) throw std::runtime_error(command + " failed: " + out.error);
  return json::parse(out.summary);
}

// least-squares line y = a + b x
std::pair<double, double> line_fit(const std::vector<double> &x, const std::vector<double> &y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sx += x[k];
    sy += y[k];
    sxx += x[k] * x[k];
    sxy += x[k] * y[k];
  }
  const double b = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {(sy - b * sx) / n, b};
}

double soliton_error(double h, double dt, double T, double &mass_drift) {
  const GroundState gs = solve_ground_state(3.0, 1.0, 1);
  const GridPtr g = build_grid(1, 20.0, static_cast<int>(std::lround(40.0 / h)) - 1);
  SolitonParams prm;
  prm.p = 3.0;
  prm.v = {1.0, 0.0, 0.0};
  EvolveConfig cfg;
  cfg.dt = dt;
  cfg.t1 = T;
  cfg.snapshot_every = 20;
  const Trajectory tr = evolve(soliton_field(prm, gs, 0.0, g), cfg, 3.0);
  for (const ConservationRow &r : tr.log)
    mass_drift = std::max(mass_drift, std::abs(r.mass - tr.log.front().mass) / tr.log.front().mass);
  return norm(*g, CVec(tr.snapshots.back().values - soliton_field(prm, gs, T, g).values), NormKind::L2);
}

} // namespace

int main() {
  std::printf("acceptance: %d worker thread(s)\n", thread_budget());

  criterion(1, "ground-state exactness (d=1, p in {3,7})", [] {
    bool ok = true;
    std::ostringstream d;
    for (double p : {3.0, 7.0}) {
      const auto t0 = std::chrono::steady_clock::now();
      const GroundState gs = solve_ground_state(p, 1.0, 1);
      const double secs = seconds_since(t0);
      double err = 0.0;
      for (double x = 0.0; x <= 15.0; x += 0.005) err = std::max(err, std::abs(gs.value(x) - q_closed_form_1d(p, 1.0, x)));
      ok &= err < 1e-6 && std::abs(gs.delta_fit - 1.0) < 0.02 && secs < 1.0;
      d << fmt("p=%g sup err %.2e, decay fit %.4f, %.3f s; ", p, err, gs.delta_fit, secs);
    }
    return std::make_pair(ok, d.str());
  });

  criterion(2, "scaling identity", [] {
    double worst = 0.0;
    for (double p : {3.0, 7.0})
      for (double om : {0.5, 2.0, 4.0}) worst = std::max(worst, rescale(solve_ground_state(p, 1.0, 1), om).residual);
    return std::make_pair(worst < 1e-6, fmt("max ODE residual over omega in {0.5,2,4}, p in {3,7}: %.2e", worst));
  });

  json spectrum;
  double spectrum_secs = 0.0;
  criterion(3, "kernel and eigenpair residuals", [&] {
    const auto t0 = std::chrono::steady_clock::now();
    spectrum = run_json("spectrum", {});
    spectrum_secs = seconds_since(t0);
    const double km = spectrum["kernel_residual_minus"], kp = spectrum["kernel_residual_plus"];
    const double rp = spectrum["residual_plus"], rm = spectrum["residual_minus"];
    // dense 2N x 2N block eigensolve, N = 512, L = 20, second-order stencil
    const double oracle = 2.9275437276448573;
    const LinearizedPair coarse = assemble(solve_ground_state(7.0, 1.0, 1), build_grid(1, 20.0, 512));
    const EigenModes cm = solve_unstable_pair(coarse);
    const double rel = std::abs(cm.e0 - oracle) / oracle;
    // the relation with +e0 y1 on the right, for the record
    const double literal = norm(*coarse.grid, RVec(coarse.Lminus * cm.y2 - cm.e0 * cm.y1), NormKind::L2) /
                           std::hypot(norm(*coarse.grid, cm.y1, NormKind::H1), norm(*coarse.grid, cm.y2, NormKind::H1));
    const bool ok = km < 1e-6 && kp < 1e-4 && rp < 1e-6 && rm < 1e-6 && rel < 1e-4;
    return std::make_pair(ok, fmt("|L-Q|/|Q|_H1 %.2e, |L+dQ|/|dQ|_H1 %.2e, |L+y1-e0y2| %.2e, |L-y2+e0y1| %.2e "
                                  "(literal L-y2 = +e0y1: %.2e), e0 %.10f vs dense %.10f (rel %.1e)",
                                  km, kp, rp, rm, literal, cm.e0, oracle, rel));
  });

  criterion(4, "coercivity certificate", [&] {
    const auto t0 = std::chrono::steady_clock::now();
    const json s = spectrum.is_null() ? run_json("spectrum", {}) : spectrum;
    const double secs = spectrum.is_null() ? seconds_since(t0) : spectrum_secs;
    const double lam = s["lambda_min"], lowest = s["lowest_eigenvalue_Lplus"], margin = s["probe_min_margin"];
    const int probes = s["probes"];
    const bool ok = lam > 0.0 && lowest < 0.0 && margin >= -1e-8 && probes == 100 && secs < 60.0;
    return std::make_pair(ok, fmt("lambda_min %.6f, min (L+h,h)/|h|^2 %.4f, %d probes min Phi - lambda_min %.3e, %.1f s",
                                  lam, lowest, probes, margin, secs));
  });

  criterion(5, "e_omega scaling exponent", [] {
    const GroundState g1 = solve_ground_state(7.0, 1.0, 1);
    std::vector<double> lx, ly;
    std::ostringstream d;
    for (double om : {1.0, 2.0, 4.0}) {
      const GridPtr grid = build_grid(1, 25.0 / std::sqrt(om), 2499);
      const EigenModes m = solve_unstable_pair(assemble(rescale(g1, om), grid, 8));
      lx.push_back(std::log(om));
      ly.push_back(std::log(m.e0));
      d << fmt("e(%g)=%.8f ", om, m.e0);
    }
    const auto [a, kappa] = line_fit(lx, ly);
    double resid = 0.0;
    for (std::size_t k = 0; k < lx.size(); ++k) resid = std::max(resid, std::abs(std::exp(a + kappa * lx[k] - ly[k]) - 1.0));
    d << fmt("fitted kappa %.6f (claimed 3/2), max fit residual %.2e", kappa, resid);
    return std::make_pair(resid < 0.01, d.str());
  });

  criterion(6, "evolution correctness", [] {
    const auto t0 = std::chrono::steady_clock::now();
    double drift = 0.0;
    const double e1 = soliton_error(0.05, 0.01, 2.0, drift), e2 = soliton_error(0.025, 0.005, 2.0, drift);
    const GroundState gs = solve_ground_state(3.0, 1.0, 1);
    const GridPtr g = build_grid(1, 20.0, 799, Obstacle::ball(1.0));
    const CutoffPsi psi = build_cutoff(*g, 1.5, 3.0);
    SolitonParams prm;
    prm.v = {-1.0, 0.0, 0.0};
    prm.x0 = {6.0, 0.0, 0.0};
    const Field u0 = soliton_field(prm, gs, 0.0, g, &psi);
    EvolveConfig fwd;
    fwd.dt = 0.005;
    fwd.t1 = 2.0;
    const Trajectory a = evolve(u0, fwd, 3.0);
    EvolveConfig back = fwd;
    back.t0 = 2.0;
    back.t1 = 0.0;
    const Trajectory b = evolve(a.snapshots.back(), back, 3.0);
    const double rev = norm(*g, CVec(b.snapshots.back().values - u0.values), NormKind::L2);
    for (const Trajectory *t : {&a, &b})
      for (const ConservationRow &r : t->log)
        drift = std::max(drift, std::abs(r.mass - t->log.front().mass) / t->log.front().mass);
    const double secs = seconds_since(t0);
    const double ratio = e1 / e2;
    const bool ok = ratio > 3.5 && ratio < 4.5 && drift < 1e-8 && rev < 1e-6 && secs < 120.0;
    return std::make_pair(ok, fmt("error ratio %.3f (%.3e / %.3e), max mass drift %.2e, reversal %.2e, %.1f s", ratio,
                                  e1, e2, drift, rev, secs));
  });

  criterion(7, "energy identity", [] {
    const GroundState gs = solve_ground_state(3.0, 1.0, 1);
    const GridPtr g = build_grid(1, 30.0, 2999);
    double worst = 0.0;
    for (double v : {0.0, 1.0, 2.0}) {
      SolitonParams prm;
      prm.v = {v, 0.0, 0.0};
      const Functionals f = functionals(soliton_field(prm, gs, 0.0, g), prm, 8);
      worst = std::max(worst, std::abs(f.energy - (v * v / 8.0 * 4.0 - 2.0 / 3.0)));
    }
    return std::make_pair(worst < 1e-8, fmt("max |E(H) - (|v|^2/8 M(Q) + E(Q))| over v in {0,1,2}: %.2e", worst));
  });

  criterion(8, "threshold formulas", [] {
    const double a = threshold_exponent(7, 3), b = threshold_exponent(3, 1), c = threshold_exponent(5, 1);
    return std::make_pair(a == 0.0 && b == 0.5 && c == 1.0, fmt("s(7/3)=%.17g s(3)=%.17g s(5)=%.17g", a, b, c));
  });

  criterion(9, "fixed-point construction", [] {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<double> speeds = {1.0, 1.5, 2.0, 4.0, 8.0, 16.0};
    std::vector<double> ratio;
    std::vector<json> runs;
    std::ostringstream d;
    for (double v : speeds) {
      ExperimentConfig c;
      c.v = {v};
      runs.push_back(run_json("fixed-point", c));
      ratio.push_back(runs.back()["measured_ratio"]);
      d << fmt("v=%g ratio %.3g; ", v, ratio.back());
    }
    // V0: smallest sampled speed from which every ratio stays below 1/2
    std::size_t i0 = speeds.size();
    while (i0 > 0 && ratio[i0 - 1] < 0.5) --i0;
    bool ok = i0 < speeds.size() && ratio.front() > 1.0;
    for (std::size_t k = i0; k < speeds.size(); ++k) {
      ok &= runs[k]["contracting"].get<bool>();
      ok &= runs[k]["decay_rate"].get<double>() >= runs[k]["required_decay_rate"].get<double>();
    }
    // |v| in {2,4,8,16}: nonincreasing
    for (std::size_t k = 3; k < speeds.size(); ++k) ok &= ratio[k] <= ratio[k - 1];
    // ratio = 1 crossing by log interpolation
    double vcross = std::nan("");
    for (std::size_t k = 1; k < speeds.size(); ++k)
      if (ratio[k - 1] >= 1.0 && ratio[k] < 1.0) {
        const double s = std::log(ratio[k - 1]) / (std::log(ratio[k - 1]) - std::log(ratio[k]));
        vcross = std::exp(std::log(speeds[k - 1]) + s * (std::log(speeds[k]) - std::log(speeds[k - 1])));
      }
    const double V0 = i0 < speeds.size() ? speeds[i0] : std::nan("");
    d << fmt("V0 %g (ratio 1 crossing near %.3f); ", V0, vcross);

    // refinement and horizon checks at the largest speed
    ExperimentConfig base;
    base.v = {8.0};
    base.Tmax = 4.0;
    base.L = 60.0;
    const json coarse = run_json("fixed-point", base);
    ExperimentConfig fine = base;
    fine.h = 0.025;
    fine.dt = 0.001;
    const json refined = run_json("fixed-point", fine);
    ExperimentConfig longer = base;
    longer.Tmax = 8.0;
    longer.L = 8.0 * 8.0 + 12.0; // keep the soliton inside the box
    const json horizon = run_json("fixed-point", longer);
    const double rr = coarse["max_residual"].get<double>() / refined["max_residual"].get<double>();
    const double rE = coarse["r_E"].get<double>(), rE2 = horizon["r_E"].get<double>();
    const double change = std::abs(rE2 - rE) / rE;
    ok &= rr > 3.0 && rr < 5.0 && change < 0.01;
    const double secs = seconds_since(t0);
    ok &= secs < 600.0;
    d << fmt("decay %.2f vs required %.2f at v=8; residual refinement ratio %.3f; |r|_E change on doubling Tmax %.2e; %.0f s",
             runs[4]["decay_rate"].get<double>(), runs[4]["required_decay_rate"].get<double>(), rr, change, secs);
    return std::make_pair(ok, d.str());
  });

  // one search feeds criteria 10 and 11
  const auto shoot_start = std::chrono::steady_clock::now();
  std::optional<SearchResult> search;
  std::optional<ShootSetup> shoot;
  std::string shoot_error;
  try {
    shoot = shoot_setup(resolve_config("shoot", {}));
    search = shoot_search(shoot->frame, shoot->shoot, shoot->evolve);
  } catch (const std::exception &e) {
    shoot_error = e.what();
  }

  criterion(10, "shooting construction", [&] {
    if (!search) throw std::runtime_error(shoot_error);
    const ShootLog &log = search->log;
    std::vector<double> t, dist;
    bool bounds = true;
    for (const ShootRow &r : log.rows) {
      t.push_back(r.t);
      dist.push_back(r.dist_h1);
      const double e = std::exp(-log.rate * r.t) * (1.0 + 1e-9);
      bounds &= r.r_h1 <= log.M * e && r.y_abs <= log.Mprime * e && std::abs(r.mu) <= log.Mprime * e &&
                std::abs(r.alpha_plus) <= e;
    }
    const ExpFit env = fit_envelope(t, dist, log.rate);
    const double am = alpha_minus_monitor(log);

    // mistuned by +-10 bracket widths
    ShootConfig lean = search->config;
    lean.keep_snapshots = false;
    const double width = search->hi - search->lo;
    const double e0 = shoot->frame.modes.e0 * shoot->frame.params.omega; // omega-scaled
    bool mis_ok = true;
    std::ostringstream md;
    for (double sgn : {1.0, -1.0}) {
      const ShootLog mis = backward_shoot(shoot->frame, search->alpha_star + sgn * 10.0 * width, lean, shoot->evolve);
      const double g = fit_alpha_growth(mis, log, 0.0);
      mis_ok &= mis.exit_reason != ExitReason::reached_T0 && mis.exit_time > log.exit_time &&
                std::abs(g - e0) <= 0.2 * e0;
      md << fmt("%+g: exit %s at t=%.3f, growth %.4f; ", 10.0 * sgn, to_string(mis.exit_reason).c_str(), mis.exit_time, g);
    }
    const double secs = seconds_since(shoot_start);
    const bool ok = log.exit_reason == ExitReason::reached_T0 && bounds && std::isfinite(env.C) && env.C > 0.0 &&
                    am <= 1.0 && mis_ok && secs < 900.0;
    return std::make_pair(ok, fmt("alpha* %.6e after %d bisections, reached T0=%g, fitted C %.4f (M %.3f), "
                                  "alpha- max ratio %.4f; mistuned %se0 %.4f; %.0f s",
                                  search->alpha_star, search->bisections, log.exit_time, env.C, log.M, am,
                                  md.str().c_str(), e0, secs));
  });

  criterion(11, "Lyapunov drift", [&] {
    if (!search) throw std::runtime_error(shoot_error);
    const ShootLog &log = search->log;
    std::vector<double> t, rate;
    lyapunov_drift(log, 64.0 * std::numeric_limits<double>::epsilon() * std::abs(log.rows.front().lyapunov), t, rate);
    const ExpFit fit = fit_envelope(t, rate, 2.0 * log.rate);
    const bool ok = fit.C > 0.0 && fit.r_squared > 0.9 && fit.samples >= 3;
    return std::make_pair(ok, fmt("C1 %.4f, fitted slope %.4f vs -2*rate %.4f, R^2 %.4f over %d samples", fit.C,
                                  fit.slope, -2.0 * log.rate, fit.r_squared, fit.samples));
  });

  criterion(12, "determinism", [] {
    std::vector<std::pair<std::string, ExperimentConfig>> suites;
    suites.push_back({"ground-state", {}});
    suites.push_back({"spectrum", {}});
    suites.push_back({"functionals", {}});
    ExperimentConfig ev;
    ev.t1 = 0.5;
    suites.push_back({"evolve", ev});
    ExperimentConfig fp;
    fp.v = {8.0};
    suites.push_back({"fixed-point", fp});
    ExperimentConfig sw;
    sw.sweep_command = "fixed-point";
    sw.sweep_values = {4.0, 8.0};
    suites.push_back({"sweep", sw});
    suites.push_back({"shoot", {}});
    bool ok = true;
    std::ostringstream d;
    for (const auto &[cmd, cfg] : suites) {
      const RunOutput a = run(cmd, cfg, false), b = run(cmd, cfg, false);
      const bool same = a.exit_code == 0 && a.summary == b.summary;
      ok &= same;
      d << cmd << (same ? " identical; " : " DIFFERS; ");
    }
    return std::make_pair(ok, d.str());
  });

  std::printf("acceptance: %d failure(s)\n", failures);
  return failures == 0 ? 0 : 1;
}
