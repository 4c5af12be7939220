// osl: obstacle soliton laboratory
// Copyright (c) 2026 the osl developers

#include "osl/run.hpp"
#include "osl/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace osl {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

double speed_of(const ExperimentConfig &c) {
  double s = 0.0;
  for (double x : c.v) s += x * x;
  return std::sqrt(s);
}

Vec3 velocity_of(const ExperimentConfig &c) {
  if (c.v.empty() || static_cast<int>(c.v.size()) > 3) throw PreconditionError("v needs 1 to 3 components");
  if (c.v.size() > 1 && static_cast<int>(c.v.size()) != c.dim)
    throw PreconditionError("v has " + std::to_string(c.v.size()) + " components for dim " + std::to_string(c.dim));
  Vec3 v{0.0, 0.0, 0.0};
  for (std::size_t k = 0; k < c.v.size(); ++k) v[k] = c.v[k];
  return v;
}

SolitonParams params_of(const ExperimentConfig &c) {
  SolitonParams prm;
  prm.omega = c.omega;
  prm.p = c.p;
  prm.v = velocity_of(c);
  return prm;
}

Obstacle obstacle_of(const ExperimentConfig &c) { return c.a > 0.0 ? Obstacle::ball(c.a) : Obstacle::none(); }

// whole number of steps of dt in a span, rounding up
double whole_steps(double span, double dt) { return std::ceil(span / dt - 1e-9) * dt; }

class CsvWriter {
public:
  CsvWriter(const fs::path &path, const std::string &hash, const std::vector<std::string> &header) : out_(path) {
    if (!out_) throw PreconditionError("cannot write " + path.string());
    out_ << "# config_hash=" << hash << "\n";
    for (std::size_t k = 0; k < header.size(); ++k) out_ << (k ? "," : "") << header[k];
    out_ << "\n";
  }
  void row(const std::vector<double> &xs) {
    char buf[64];
    for (std::size_t k = 0; k < xs.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", xs[k]);
      out_ << (k ? "," : "") << buf;
    }
    out_ << "\n";
  }
  void raw(const std::string &line) { out_ << line << "\n"; }

private:
  std::ofstream out_;
};

struct Context {
  ExperimentConfig cfg;
  std::string hash;
  bool write = true;
  fs::path dir;

  fs::path file(const std::string &name) const { return dir / name; }
};

json grid_json(const Grid &g) {
  return {{"dim", g.dim()}, {"L", g.L()}, {"n", g.n()}, {"h", g.h()}, {"obstacle_a", g.obstacle().a},
          {"active", static_cast<long long>(g.size())}};
}

// ---------------------------------------------------------------- commands

json cmd_ground_state(const Context &ctx) {
  const ExperimentConfig &c = ctx.cfg;
  const GroundState gs = solve_ground_state(c.p, c.omega, c.dim, c.gs_tol);
  json s = {{"q0", gs.q0},           {"delta_fit", gs.delta_fit}, {"ode_residual", ode_residual(gs)},
            {"p", gs.p},             {"omega", gs.omega},         {"dim", gs.dim},
            {"r_max", gs.r_max()},   {"samples", gs.r.size()}};
  if (c.dim == 1) {
    double err = 0.0;
    for (std::size_t k = 0; k < gs.r.size(); ++k)
      err = std::max(err, std::abs(gs.q[k] - q_closed_form_1d(c.p, c.omega, gs.r[k])));
    s["closed_form_sup_error"] = err;
  }
  const ProfileIntegrals pi = profile_integrals(gs);
  s["mass"] = pi.mass;
  s["energy"] = pi.energy;
  if (ctx.write) {
    CsvWriter csv(ctx.file("profile.csv"), ctx.hash, {"r", "q", "dq"});
    for (std::size_t k = 0; k < gs.r.size(); ++k) csv.row({gs.r[k], gs.q[k], gs.dq[k]});
  }
  return s;
}

json cmd_spectrum(const Context &ctx) {
  const ExperimentConfig &c = ctx.cfg;
  const GroundState gs = solve_ground_state(c.p, c.omega, c.dim, c.gs_tol);
  const GridPtr grid = build_grid(c.dim, c.L, c.n);
  const LinearizedPair pair = assemble(gs, grid, c.stencil);
  json s = {{"grid", grid_json(*grid)}, {"p", c.p}, {"omega", c.omega}, {"stencil", c.stencil}};
  s["lowest_eigenvalue_Lplus"] = lowest_eigenvalue_Lplus(pair);
  s["kernel_residual_minus"] = norm(*grid, RVec(pair.Lminus * pair.Q), NormKind::L2) / norm(*grid, pair.Q, NormKind::H1);
  s["kernel_residual_plus"] =
      norm(*grid, RVec(pair.Lplus * pair.dQ[0]), NormKind::L2) / norm(*grid, pair.dQ[0], NormKind::H1);
  EigenModes modes;
  try {
    modes = solve_unstable_pair(pair, c.eig_tol);
  } catch (const SpectrallyStable &e) {
    s["stable"] = true;
    s["e0"] = nullptr;
    s["detail"] = e.what();
    return s;
  }
  s["stable"] = false;
  s["e0"] = modes.e0;
  s["pairing"] = modes.pairing;
  s["residual_plus"] = modes.residual_plus;
  s["residual_minus"] = modes.residual_minus;
  s["rayleigh_e2"] = modes.rayleigh_e2;
  s["overlap_Q"] = modes.overlap_Q;
  const CoercivityCertificate cert = coercivity_certificate(pair, modes);
  s["lambda_min"] = cert.lambda_min;
  s["lambda_plus_block"] = cert.lambda_plus;
  s["lambda_minus_block"] = cert.lambda_minus;
  // random constrained probes, all from the config seed
  std::mt19937_64 rng(static_cast<std::uint64_t>(c.seed));
  std::normal_distribution<double> gauss;
  double worst = std::numeric_limits<double>::infinity();
  for (int k = 0; k < c.probes; ++k) {
    RVec h1(grid->size()), h2(grid->size());
    for (Index j = 0; j < grid->size(); ++j) {
      h1[j] = gauss(rng) * pair.Q[j];
      h2[j] = gauss(rng) * pair.Q[j];
    }
    project_constraints(pair, modes, h1, h2);
    const double nn = std::sqrt(std::pow(norm(*grid, h1, NormKind::H1), 2) + std::pow(norm(*grid, h2, NormKind::H1), 2));
    h1 /= nn;
    h2 /= nn;
    worst = std::min(worst, quadratic_form(pair, h1, h2) - cert.lambda_min);
  }
  s["probes"] = c.probes;
  s["probe_min_margin"] = c.probes > 0 ? worst : 0.0;
  if (ctx.write) {
    CsvWriter csv(ctx.file("modes.csv"), ctx.hash, {"x", "y1", "y2"});
    for (Index j = 0; j < grid->size(); ++j) csv.row({grid->coord(j, 0), modes.y1[j], modes.y2[j]});
    CVec y(grid->size());
    for (Index j = 0; j < grid->size(); ++j) y[j] = cplx(modes.y1[j], modes.y2[j]);
    save_field(ctx.file("mode.bin").string(), Field{grid, y});
  }
  return s;
}

Field default_field(const ExperimentConfig &c, double t) {
  if (!c.in.empty()) return load_field(c.in).field;
  const GridPtr grid = build_grid(c.dim, c.L, c.n, obstacle_of(c));
  const GroundState gs = solve_ground_state(c.p, c.omega, c.dim, c.gs_tol);
  if (c.a > 0.0) {
    const CutoffPsi psi = build_cutoff(*grid, c.R1, c.R2);
    return soliton_field(params_of(c), gs, t, grid, &psi);
  }
  return soliton_field(params_of(c), gs, t, grid);
}

json cmd_functionals(const Context &ctx) {
  const ExperimentConfig &c = ctx.cfg;
  const Field u = default_field(c, c.t0);
  const SolitonParams prm = params_of(c);
  const Functionals f = functionals(u, prm);
  json s = {{"M", f.mass},
            {"E", f.energy},
            {"P", std::vector<double>(f.momentum.begin(), f.momentum.begin() + u.grid->dim())},
            {"lyapunov", f.lyapunov},
            {"grid", grid_json(*u.grid)}};
  const GroundState gs = solve_ground_state(c.p, 1.0, u.grid->dim(), c.gs_tol);
  const ThresholdReport tr = threshold_report(u, c.p, gs);
  s["s"] = tr.s;
  s["thresholds"] = {{"outside_range", tr.outside_range},   {"mass", tr.mass},
                     {"energy", tr.energy},                 {"grad_norm", tr.grad_norm},
                     {"scale_inv_grad", tr.scale_inv_grad}, {"scale_inv_me", tr.scale_inv_me},
                     {"q_scale_inv_grad", tr.q_scale_inv_grad}, {"q_scale_inv_me", tr.q_scale_inv_me}};
  return s;
}

json cmd_evolve(const Context &ctx) {
  const ExperimentConfig &c = ctx.cfg;
  const Field u0 = default_field(c, c.t0);
  EvolveConfig ec;
  ec.dt = c.dt;
  ec.t0 = c.t0;
  ec.t1 = c.t1;
  ec.lin_tol = c.lin_tol;
  ec.snapshot_every = c.snapshot_every;
  ec.stencil = c.stencil;
  ec.time_order = c.time_order;
  ec.reference = params_of(c);
  const Trajectory traj = evolve(u0, ec, c.p);
  const ConservationRow &a = traj.log.front(), &b = traj.log.back();
  json s = {{"steps", step_count(ec)},
            {"snapshots", traj.snapshots.size()},
            {"mass_drift", std::abs(b.mass - a.mass) / a.mass},
            {"energy_drift", std::abs(b.energy - a.energy) / std::max(std::abs(a.energy), 1e-300)},
            {"lyapunov_drift", std::abs(b.lyapunov - a.lyapunov)},
            {"final_h1", b.h1},
            {"grid", grid_json(*u0.grid)}};
  if (ctx.write) {
    const fs::path dir = ctx.file("trajectory");
    fs::create_directories(dir);
    CsvWriter csv(dir / "conservation.csv", ctx.hash, {"t", "M", "E", "lyapunov", "H1norm"});
    for (std::size_t k = 0; k < traj.log.size(); ++k) {
      const ConservationRow &r = traj.log[k];
      csv.row({r.t, r.mass, r.energy, r.lyapunov, r.h1});
      char name[32];
      std::snprintf(name, sizeof name, "snap_%05zu.bin", k);
      save_field((dir / name).string(), traj.snapshots[k], c.R1, c.R2);
    }
  }
  return s;
}

json cmd_fixed_point(const Context &ctx) {
  const FixedPointSetup fp = fixed_point_setup(ctx.cfg);
  const SourceSet src = make_sources(fp.params, fp.gs, fp.psi, fp.grid, fp.picard.Tmax);
  const PicardResult res = picard(src, fp.picard);
  const PicardReport &r = res.report;
  const double rate = fp.picard.enorm.delta * std::sqrt(fp.params.omega) * fp.params.speed();
  json s = {{"status", r.status},
            {"contracting", r.contracting},
            {"measured_ratio", r.measured_ratio},
            {"contraction_ratios", r.contraction_ratios},
            {"iterates", r.iterates},
            {"increments", r.increments},
            {"J0", r.J0},
            {"J1", r.J1},
            {"J2", r.J2},
            {"J3", r.J3},
            {"max_residual", r.max_residual},
            {"decay_rate", r.decay_rate},
            {"required_decay_rate", 0.9 * rate},
            {"r_E", r.iterates.empty() ? 0.0 : r.iterates.back()},
            {"T0", fp.picard.T0},
            {"Tmax", fp.picard.Tmax},
            {"dt", fp.picard.dt},
            {"v", fp.params.speed()},
            {"grid", grid_json(*fp.grid)}};
  if (ctx.write) {
    CsvWriter csv(ctx.file("picard.csv"), ctx.hash, {"k", "iterate_E", "increment_E", "ratio"});
    for (std::size_t k = 0; k < r.increments.size(); ++k) {
      const double it = k < r.iterates.size() ? r.iterates[k] : std::nan("");
      const double ratio = k >= 1 && k - 1 < r.contraction_ratios.size() ? r.contraction_ratios[k - 1] : std::nan("");
      csv.row({static_cast<double>(k), it, r.increments[k], ratio});
    }
    CsvWriter rcsv(ctx.file("residual.csv"), ctx.hash, {"t", "nls_residual"});
    for (std::size_t k = 0; k < r.final_residual.size(); ++k)
      rcsv.row({res.r.time(k + 1), r.final_residual[k]});
    // about 20 snapshots of the remainder
    const fs::path dir = ctx.file("remainder");
    fs::create_directories(dir);
    const std::size_t stride = std::max<std::size_t>(1, res.r.values.size() / 20);
    CsvWriter idx(dir / "index.csv", ctx.hash, {"k", "t"});
    for (std::size_t k = 0; k < res.r.values.size(); k += stride) {
      char name[32];
      std::snprintf(name, sizeof name, "r_%05zu.bin", k);
      save_field((dir / name).string(), Field{fp.grid, res.r.values[k]}, fp.psi.R1, fp.psi.R2);
      idx.row({static_cast<double>(k), res.r.time(k)});
    }
  }
  return s;
}

void write_shoot_log(const Context &ctx, const ShootLog &log, const std::string &name) {
  CsvWriter csv(ctx.file(name), ctx.hash,
                {"t", "r_l2", "r_h1", "y_abs", "mu_abs", "alpha_plus", "alpha_minus", "lyapunov", "N", "dist_h1"});
  for (const ShootRow &r : log.rows)
    csv.row({r.t, r.r_l2, r.r_h1, r.y_abs, std::abs(r.mu), r.alpha_plus, r.alpha_minus, r.lyapunov, r.N, r.dist_h1});
}

json cmd_shoot(const Context &ctx) {
  ShootSetup ss = shoot_setup(ctx.cfg);
  const ModulationFrame &f = ss.frame;
  json s = {{"e0", f.modes.e0}, {"grid", grid_json(*f.grid)}};
  ShootLog log;
  double growth = std::nan("");
  if (ctx.cfg.search) {
    const SearchResult sr = shoot_search(f, ss.shoot, ss.evolve);
    log = sr.log;
    s["alpha_star"] = sr.alpha_star;
    s["bisections"] = sr.bisections;
    s["bracket_width"] = sr.hi - sr.lo;
    ShootConfig lean = sr.config;
    lean.keep_snapshots = false;
    const ShootLog mis = backward_shoot(f, sr.alpha_star + 10.0 * (sr.hi - sr.lo), lean, ss.evolve);
    s["mistuned_exit_time"] = mis.exit_time;
    s["mistuned_exit_reason"] = to_string(mis.exit_reason);
    try {
      growth = fit_alpha_growth(mis, log, 0.0);
    } catch (const NumericalError &) {
    }
  } else {
    log = backward_shoot(f, ctx.cfg.alpha_plus, ss.shoot, ss.evolve);
    s["alpha_star"] = ctx.cfg.alpha_plus;
    std::vector<double> t, a;
    for (const ShootRow &r : log.rows) {
      t.push_back(r.t);
      a.push_back(std::abs(r.alpha_plus));
    }
    const ExpFit fit = fit_envelope(t, a, 0.0);
    if (fit.samples >= 3) growth = -fit.slope;
  }
  std::vector<double> t, dist;
  for (const ShootRow &r : log.rows) {
    t.push_back(r.t);
    dist.push_back(r.dist_h1);
  }
  const ExpFit env = fit_envelope(t, dist, log.rate);
  s["exit_time"] = log.exit_time;
  s["exit_reason"] = to_string(log.exit_reason);
  s["fitted_C"] = env.C;
  s["fitted_growth_rate"] = std::isfinite(growth) ? json(growth) : json(nullptr);
  s["alpha_minus_ratio"] = alpha_minus_monitor(log);
  s["lambda_plus"] = log.lambda_plus;
  s["lambda_minus"] = log.lambda_minus;
  s["M"] = log.M;
  s["Mprime"] = log.Mprime;
  s["delta"] = log.delta;
  std::vector<double> lt, lr;
  lyapunov_drift(log, 64.0 * std::numeric_limits<double>::epsilon() * std::abs(log.rows.front().lyapunov), lt, lr);
  const ExpFit ly = fit_envelope(lt, lr, 2.0 * log.rate);
  s["lyapunov_C1"] = ly.C;
  s["lyapunov_slope"] = ly.slope;
  s["lyapunov_r_squared"] = ly.r_squared;
  if (!log.detail.empty()) s["detail"] = log.detail;
  if (ctx.write) write_shoot_log(ctx, log, "shoot.csv");
  return s;
}

json run_command(const std::string &command, const Context &ctx);

json cmd_sweep(const Context &ctx) {
  const ExperimentConfig &c = ctx.cfg;
  if (c.sweep_values.empty()) throw PreconditionError("sweep needs a nonempty sweep_values");
  if (c.sweep_command == "sweep") throw PreconditionError("sweep cannot nest");
  if (std::find(subcommands().begin(), subcommands().end(), c.sweep_command) == subcommands().end())
    throw PreconditionError("unknown sweep_command '" + c.sweep_command + "'");
  get_key(c, c.sweep_key); // rejects unknown keys up front

  const std::size_t m = c.sweep_values.size();
  std::vector<RunOutput> results(m);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < m; k = next++) {
      ExperimentConfig sub = c;
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.17g", c.sweep_values[k]);
      sub.sweep_values.clear();
      sub.out = (ctx.dir / ("run_" + std::to_string(k))).string();
      try {
        set_key(sub, c.sweep_key, buf);
        results[k] = run(c.sweep_command, sub, ctx.write);
      } catch (const PreconditionError &e) {
        results[k] = {2, "", e.what()};
      }
    }
  };
  const int threads = std::min<int>(thread_budget(), static_cast<int>(m));
  std::vector<std::thread> pool;
  for (int k = 1; k < threads; ++k) pool.emplace_back(worker);
  worker();
  for (std::thread &t : pool) t.join();

  // aggregate: one row per run, numeric top-level fields as columns
  std::vector<json> parsed(m);
  std::set<std::string> columns;
  for (std::size_t k = 0; k < m; ++k) {
    if (results[k].exit_code != 0) continue;
    parsed[k] = json::parse(results[k].summary);
    for (auto it = parsed[k].begin(); it != parsed[k].end(); ++it)
      if (it.value().is_number() || it.value().is_boolean()) columns.insert(it.key());
  }
  json rows = json::array();
  for (std::size_t k = 0; k < m; ++k) {
    json row = {{c.sweep_key, c.sweep_values[k]},
                {"exit_code", results[k].exit_code},
                {"status", results[k].exit_code == 0 ? "ok" : (results[k].exit_code == 2 ? "precondition" : "numerical")}};
    if (results[k].exit_code == 0) {
      for (const std::string &col : columns)
        if (parsed[k].contains(col)) row[col] = parsed[k][col];
      if (parsed[k].contains("status") && parsed[k]["status"].is_string()) row["run_status"] = parsed[k]["status"];
    } else {
      row["error"] = results[k].error;
    }
    rows.push_back(row);
  }
  if (ctx.write) {
    std::ofstream out(ctx.file("sweep.csv"));
    out << "# config_hash=" << ctx.hash << "\n";
    out << c.sweep_key << ",status,exit_code";
    for (const std::string &col : columns) out << "," << col;
    out << "\n";
    for (std::size_t k = 0; k < m; ++k) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.17g", c.sweep_values[k]);
      out << buf << "," << rows[k]["status"].get<std::string>() << "," << results[k].exit_code;
      for (const std::string &col : columns) {
        out << ",";
        if (!rows[k].contains(col)) continue; // failed runs keep empty fields
        const json &v = rows[k][col];
        if (v.is_boolean()) out << (v.get<bool>() ? 1 : 0);
        else {
          std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
          out << buf;
        }
      }
      out << "\n";
    }
  }
  return {{"command", c.sweep_command}, {"key", c.sweep_key}, {"rows", rows}};
}

json run_command(const std::string &command, const Context &ctx) {
  if (command == "ground-state") return cmd_ground_state(ctx);
  if (command == "spectrum") return cmd_spectrum(ctx);
  if (command == "functionals") return cmd_functionals(ctx);
  if (command == "evolve") return cmd_evolve(ctx);
  if (command == "fixed-point") return cmd_fixed_point(ctx);
  if (command == "shoot") return cmd_shoot(ctx);
  if (command == "sweep") return cmd_sweep(ctx);
  throw PreconditionError("unknown subcommand '" + command + "'");
}

} // namespace

const std::vector<std::string> &subcommands() {
  static const std::vector<std::string> names = {"ground-state", "spectrum", "functionals", "evolve",
                                                 "fixed-point",  "shoot",    "sweep"};
  return names;
}

ExperimentConfig resolve_config(const std::string &command, ExperimentConfig c) {
  if (std::find(subcommands().begin(), subcommands().end(), command) == subcommands().end())
    throw PreconditionError("unknown subcommand '" + command + "'");
  if (command == "sweep") return c;
  if (c.dim < 1 || c.dim > 3) throw PreconditionError("dim must be 1, 2 or 3");
  if (!(c.omega > 0.0)) throw PreconditionError("omega must be positive");
  const bool shoot = command == "shoot";
  if (c.p == 0.0) c.p = (shoot || command == "spectrum") ? 7.0 : 3.0;
  if (!(c.p > 1.0)) throw PreconditionError("p must exceed 1");
  const double v = speed_of(c);
  if (command == "fixed-point") {
    if (!(v > 0.0)) throw PreconditionError("fixed-point needs |v| > 0");
    if (c.T0 == 0.0) c.T0 = 2.0;
    if (c.delta == 0.0) c.delta = 0.8;
    if (c.dt == 0.0) c.dt = v >= 4.0 ? 0.002 : 0.005;
    if (c.Tmax == 0.0) c.Tmax = c.T0 + whole_steps(std::max(2.0, 6.4 / (c.delta * v)), c.dt);
    if (c.L == 0.0) c.L = v * c.Tmax + 12.0;
    if (c.h == 0.0 && c.n == 0) c.h = 0.05;
  } else if (shoot) {
    if (c.T0 == 0.0) c.T0 = 8.0;
    if (c.Tn == 0.0) c.Tn = 15.0;
    if (c.L == 0.0) c.L = 30.0;
    if (c.h == 0.0 && c.n == 0) c.h = 0.02;
    if (c.dt == 0.0) c.dt = 0.002;
    if (c.stencil == 0) c.stencil = 8;
    if (c.time_order == 0) c.time_order = 4;
    if (c.log_every == 0) c.log_every = 25;
  } else if (command == "spectrum") {
    if (c.L == 0.0) c.L = 25.0;
    if (c.h == 0.0 && c.n == 0) c.h = 0.02;
    if (c.stencil == 0) c.stencil = 8;
  } else {
    if (c.L == 0.0) c.L = 30.0;
    if (c.h == 0.0 && c.n == 0) c.h = 0.05;
    if (c.dt == 0.0) c.dt = 0.005;
  }
  if (c.stencil == 0) c.stencil = 2;
  if (c.time_order == 0) c.time_order = 2;
  if (c.log_every == 0) c.log_every = 10;
  if (c.n == 0) c.n = static_cast<int>(std::lround(2.0 * c.L / c.h)) - 1;
  if (c.h == 0.0) c.h = 2.0 * c.L / (c.n + 1);
  return c;
}

FixedPointSetup fixed_point_setup(const ExperimentConfig &c) {
  FixedPointSetup out;
  out.params = params_of(c);
  out.gs = solve_ground_state(c.p, c.omega, c.dim, c.gs_tol);
  out.grid = build_grid(c.dim, c.L, c.n, obstacle_of(c));
  out.psi = build_cutoff(*out.grid, c.R1, c.R2);
  out.picard.T0 = c.T0;
  out.picard.Tmax = c.Tmax;
  out.picard.dt = c.dt;
  out.picard.iters = c.iters;
  out.picard.lin_tol = c.lin_tol;
  out.picard.enorm = {c.delta, c.omega, out.params.speed()};
  return out;
}

ShootSetup shoot_setup(const ExperimentConfig &c) {
  ShootSetup out;
  ModulationFrame &f = out.frame;
  f.params = params_of(c);
  f.gs = solve_ground_state(c.p, c.omega, c.dim, c.gs_tol);
  // modes on a whole-space grid with the same spacing
  const double Lm = 20.0 / std::sqrt(c.omega);
  const int nm = static_cast<int>(std::lround(2.0 * Lm / c.h)) - 1;
  const LinearizedPair pair = assemble(f.gs, build_grid(c.dim, Lm, nm));
  f.modes = solve_unstable_pair(pair, c.eig_tol);
  f.grid = build_grid(c.dim, c.L, c.n, obstacle_of(c));
  f.psi = build_cutoff(*f.grid, c.R1, c.R2);
  f.newton_tol = c.newton_tol;
  f.eps_mod = c.eps_mod;
  out.shoot.T0 = c.T0;
  out.shoot.Tn = c.Tn;
  out.shoot.M = c.M;
  out.shoot.Mprime = c.Mprime;
  out.shoot.delta = c.delta;
  out.shoot.log_every = c.log_every;
  out.evolve.dt = c.dt;
  out.evolve.lin_tol = c.lin_tol;
  out.evolve.stencil = c.stencil;
  out.evolve.time_order = c.time_order;
  return out;
}

int thread_budget() {
  if (const char *env = std::getenv("OSL_THREADS")) {
    const int k = std::atoi(env);
    if (k >= 1) return k;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

RunOutput run(const std::string &command, const ExperimentConfig &raw, bool write_files) {
  RunOutput out;
  try {
    Context ctx;
    ctx.cfg = resolve_config(command, raw);
    ctx.hash = config_hash(ctx.cfg);
    ctx.write = write_files;
    ctx.dir = ctx.cfg.out;
    if (write_files) fs::create_directories(ctx.dir);
    json s = run_command(command, ctx);
    s["command"] = command;
    s["config_hash"] = ctx.hash;
    out.summary = s.dump(2);
    if (write_files) {
      std::ofstream f(ctx.file("summary.json"));
      f << out.summary << "\n";
      std::ofstream cf(ctx.file("config.txt"));
      cf << to_text(ctx.cfg);
    }
  } catch (const PreconditionError &e) {
    out.exit_code = 2;
    out.error = e.what();
  } catch (const NumericalError &e) {
    out.exit_code = 3;
    out.error = e.what();
  } catch (const fs::filesystem_error &e) {
    out.exit_code = 2;
    out.error = e.what();
  }
  return out;
}

} // namespace osl
