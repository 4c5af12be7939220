// osl: obstacle soliton laboratory
// Copyright (c) 2026 the osl developers

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace osl {

/// Every tunable of the drivers.  Zero in a numeric field means "pick the
/// per-subcommand default" (see resolve_config).
struct ExperimentConfig {
  double p = 0.0; // 0 selects 7 for shoot and spectrum, 3 otherwise
  double omega = 1.0;
  std::vector<double> v{1.0};
  int dim = 1;
  double L = 0.0;
  int n = 0;
  double h = 0.0;
  double a = 1.0; // obstacle radius, 0 for free space
  double R1 = 1.5;
  double R2 = 3.0;
  double dt = 0.0;
  double t0 = 0.0;
  double t1 = 1.0;
  double T0 = 0.0;
  double Tn = 0.0;
  double Tmax = 0.0;
  double delta = 0.0;
  double M = 0.0;
  double Mprime = 0.0;
  double eps_mod = 0.0;
  double newton_tol = 1e-12;
  double lin_tol = 1e-12;
  double gs_tol = 1e-14;
  double eig_tol = 1e-12;
  int iters = 12;
  int seed = 1;
  int stencil = 0;
  int time_order = 0;
  int log_every = 0;
  int snapshot_every = 0;
  int probes = 100;
  double alpha_plus = 0.0;
  bool search = true;
  std::string in;
  std::string out = "osl_out";
  std::string sweep_command = "fixed-point";
  std::string sweep_key = "v";
  std::vector<double> sweep_values;
};

/// Sets one key from its text value.  Throws PreconditionError naming the key
/// when it is unknown or the value does not parse.
void set_key(ExperimentConfig &cfg, const std::string &key, const std::string &value);

/// Value of one key in canonical text form.
std::string get_key(const ExperimentConfig &cfg, const std::string &key);

/// All keys, sorted.
std::vector<std::string> config_keys();

/// Flat key=value text; '#' starts a comment, blank lines are skipped.
ExperimentConfig parse_config(const std::string &text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string &path, ExperimentConfig base = {});

/// Canonical text: sorted keys, doubles with 17 significant digits, so that
/// parse_config(to_text(c)) == c.
std::string to_text(const ExperimentConfig &cfg);

/// FNV-1a 64 of the canonical text, as 16 hex digits.
std::string config_hash(const ExperimentConfig &cfg);
std::uint64_t fnv1a(const std::string &bytes);

bool operator==(const ExperimentConfig &a, const ExperimentConfig &b);

} // namespace osl
