// osl: obstacle soliton laboratory
// Copyright (c) 2026 the osl developers

#pragma once

#include "osl/config.hpp"
#include "osl/fixedpoint.hpp"
#include "osl/modulation.hpp"

#include <string>
#include <vector>

namespace osl {

const std::vector<std::string> &subcommands();

/// Fills every zero "auto" field with the subcommand's default.
///   fixed-point: T0 = 2, delta = 0.8, Tmax = T0 + max(2, 6.4/(delta |v|)) rounded
///                up to whole steps, L = |v| Tmax + 12, h = 0.05,
///                dt = 0.002 for |v| >= 4 and 0.005 below.
///   shoot:       p = 7, T0 = 8, Tn = 15, L = 30, h = 0.02, dt = 0.002,
///                order-8 Laplacian, 4th-order time composition, log every 25 steps.
///   spectrum:    p = 7, L = 25, h = 0.02, order-8 Laplacian, no obstacle.
///   otherwise:   p = 3, L = 30, h = 0.05, dt = 0.005.
/// n = round(2L/h) - 1 when n is zero.
ExperimentConfig resolve_config(const std::string &command, ExperimentConfig cfg);

struct FixedPointSetup {
  SolitonParams params;
  GroundState gs;
  CutoffPsi psi;
  GridPtr grid;
  PicardConfig picard;
};
FixedPointSetup fixed_point_setup(const ExperimentConfig &resolved);

struct ShootSetup {
  ModulationFrame frame;
  ShootConfig shoot;
  EvolveConfig evolve;
};
/// Modes come from a whole-space grid with the same spacing and a box of
/// half-width 20/sqrt(omega).
ShootSetup shoot_setup(const ExperimentConfig &resolved);

struct RunOutput {
  int exit_code = 0;   // 0 ok, 2 precondition, 3 numerical
  std::string summary; // sorted-key JSON
  std::string error;
};

/// Runs one subcommand.  With write_files the summary and the CSV/binary
/// artifacts land in cfg.out.
RunOutput run(const std::string &command, const ExperimentConfig &cfg, bool write_files = true);

/// Worker count from OSL_THREADS, at least 1.
int thread_budget();

} // namespace osl
