// osl: obstacle soliton laboratory
// Copyright (c) 2026 the osl developers

#pragma once

#include "osl/error.hpp"
#include "osl/evolve.hpp"
#include "osl/linearized.hpp"
#include "osl/soliton.hpp"

#include <string>
#include <vector>

namespace osl {

/// Everything a decomposition needs: the soliton, its ground state and
/// unstable modes at the same frequency, the cutoff and the grid.
struct ModulationFrame {
  SolitonParams params;
  GroundState gs;
  EigenModes modes;
  CutoffPsi psi;
  GridPtr grid;
  double newton_tol = 1e-12;
  double eps_mod = 0.0;      // 0 selects 0.1 |Q|_L2
  bool fd_jacobian = false;  // full finite-difference Jacobian at every step

  double epsilon() const;
};

/// Modulated soliton R~ = Q(x - c(t) - y) Psi e^{i(phi + mu)} and the
/// translation directions d_j Q~ Psi e^{i(phi + mu)}.
Field modulated_soliton(const ModulationFrame &f, double t, const Vec3 &y, double mu);
/// Y~_{+-} centered at c(t) + y with phase phi + mu.
Field modulated_mode(const ModulationFrame &f, double t, const Vec3 &y, double mu, int sign);

class ModulationFailure : public NumericalError {
public:
  explicit ModulationFailure(const std::string &what) : NumericalError(what) {}
};

struct ModulationState {
  Vec3 y{0.0, 0.0, 0.0};
  double mu = 0.0;
  Field r;
  double alpha_plus = 0.0;  // Im int Y~- conj(r)
  double alpha_minus = 0.0; // Im int Y~+ conj(r)
  int iterations = 0;
  double orthogonality = 0.0; // largest orthogonality functional after Newton
};

struct ModulationGuess {
  Vec3 y{0.0, 0.0, 0.0};
  double mu = 0.0;
};

/// Newton on (y, mu) for Re int (u - R~) conj(d_j Q~ Psi e^{i phi~}) = 0 and
/// Im int u conj(R~) = 0.  The Jacobian is the leading diagonal block
/// diag(|d_j Q~ Psi|^2, -Re int u conj(R~)), refreshed by finite differences
/// every fifth iteration.  Throws PreconditionError when |u - R~(guess)|_L2
/// exceeds eps_mod and ModulationFailure after 50 iterations.
ModulationState decompose(const ModulationFrame &f, const Field &u, double t, const ModulationGuess &guess = {});

/// h = e^{-i phi~} r.
CVec modulated_h(const ModulationFrame &f, const ModulationState &s, double t);

/// u(Tn) = R(Tn) + i lambda_plus Y+(Tn) + i lambda_minus Y-(Tn).
Field final_data(const ModulationFrame &f, double Tn, double lambda_plus, double lambda_minus);

struct FinalData {
  double lambda_plus = 0.0, lambda_minus = 0.0;
  double alpha_plus = 0.0, alpha_minus = 0.0; // achieved at Tn
  double ratio = 0.0;                         // |lambda| / |alpha_plus|
  int iterations = 0;
  Field u;
  ModulationState state;
};

/// Newton on lambda -> (alpha+(Tn), alpha-(Tn)) started from the linear
/// prediction alpha+ = -a lambda+ - b lambda-, alpha- = -b lambda+ - a lambda-
/// with a = int (y1^2 - y2^2) Psi^2, b = int (y1^2 + y2^2) Psi^2.
FinalData solve_modulated_final_data(const ModulationFrame &f, double Tn, double alpha_plus, double tol = 1e-11);

struct ShootConfig {
  double T0 = 8.0;
  double Tn = 15.0;
  double M = 0.0;      // 0 selects 10 max(|r(Tn)|_H1 e^{rate Tn}, 1) from the bracket edge
  double Mprime = 0.0; // 0 selects M^2
  double delta = 0.0;  // 0 selects 0.8 delta_fit
  int log_every = 10;  // decompose every this many steps
  bool keep_snapshots = true;
};

enum class ExitReason { reached_T0, r_bound, y_mu_bound, alpha_bound, modulation_failure };
std::string to_string(ExitReason r);

struct ShootRow {
  double t = 0.0;
  double r_l2 = 0.0, r_h1 = 0.0;
  Vec3 y{0.0, 0.0, 0.0};
  double y_abs = 0.0;
  double mu = 0.0;
  double alpha_plus = 0.0, alpha_minus = 0.0;
  double lyapunov = 0.0;   // of R~(t)
  double lyapunov_u = 0.0; // of u(t)
  double N = 0.0;          // |e^{rate t} alpha+|^2
  double dist_h1 = 0.0;    // |u - R|_H1
};

struct ShootLog {
  std::vector<ShootRow> rows; // time-ordered backward from Tn
  std::vector<Field> snapshots;
  double exit_time = 0.0;
  ExitReason exit_reason = ExitReason::reached_T0;
  std::string detail;
  double alpha_target = 0.0;
  double lambda_plus = 0.0, lambda_minus = 0.0;
  double M = 0.0, Mprime = 0.0, delta = 0.0, rate = 0.0; // rate = delta sqrt(omega) |v|

  double exit_sign() const;
};

/// Resolved bootstrap constants (M, M', delta) for a frame.
ShootConfig resolve_shoot_config(const ModulationFrame &f, const ShootConfig &cfg);

/// Integrates backward from the modulated final data and decomposes every
/// log_every steps; stops at T0 or at the first violated bound.
ShootLog backward_shoot(const ModulationFrame &f, double alpha_plus, const ShootConfig &cfg, const EvolveConfig &ecfg);

struct SearchResult {
  double alpha_star = 0.0;
  double lo = 0.0, hi = 0.0;
  int bisections = 0;
  ShootLog log;
  ShootConfig config; // with M, M', delta resolved
};

/// Sign bisection of alpha+ over [-e^{-rate Tn}, e^{-rate Tn}].
SearchResult shoot_search(const ModulationFrame &f, const ShootConfig &cfg, const EvolveConfig &ecfg,
                          int max_bisections = 80);

/// max over rows of |alpha-(t)| / (e^{-rate t} / 2).
double alpha_minus_monitor(const ShootLog &log);

/// Least-squares -d log|a(t) - b(t)|/dt over the rows shared by two logs
/// with the difference above `floor` and below `ceiling_fraction` of the
/// alpha bound.
double fit_alpha_growth(const ShootLog &a, const ShootLog &b, double floor, double ceiling_fraction = 0.1);

struct ExpFit {
  double C = 0.0;        // max_t value e^{rate t}
  double slope = 0.0;    // fitted d log value / dt
  double r_squared = 0.0;
  int samples = 0;
};

/// Envelope constant of value(t) <= C e^{-rate t} and a log-linear fit.
ExpFit fit_envelope(const std::vector<double> &t, const std::vector<double> &value, double rate);

/// |d lyapunov(R~)/dt| from centered differences of the logged column,
/// restricted to changes above `floor`.
void lyapunov_drift(const ShootLog &log, double floor, std::vector<double> &t, std::vector<double> &rate);

struct CoercivityRow {
  double t = 0.0;
  double phi = 0.0;      // (L~+ h1, h1) + (L~- h2, h2)
  double h_norm2 = 0.0;  // |h|_H1^2
  double alpha2 = 0.0;   // alpha+^2 + alpha-^2
  double cutoff = 0.0;   // M^2 e^{-4 rate t}
  double C = 0.0;        // h_norm2 / (phi + alpha2 + cutoff)
  double margin = 0.0;   // phi + alpha2 + cutoff (or phi alone when dropped)
};

/// Translated coercivity along the logged snapshots (needs keep_snapshots).
std::vector<CoercivityRow> coercivity_along_trajectory(const ModulationFrame &f, const ShootLog &log,
                                                       bool drop_alpha = false);
/// Same for one state at time t.
CoercivityRow coercivity_at(const ModulationFrame &f, const ModulationState &s, double t, double M, double rate,
                            bool drop_alpha = false);

} // namespace osl
