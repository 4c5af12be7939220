// osl: obstacle soliton laboratory
// Copyright (c) 2026 the osl developers

#include "osl/soliton.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace osl;
using Catch::Approx;

namespace {

SolitonParams cubic(double v = 0.0) {
  SolitonParams p;
  p.p = 3.0;
  p.v = {v, 0.0, 0.0};
  return p;
}

} // namespace

TEST_CASE("resting soliton at t = 0 is the real ground state") {
  const GroundState gs = solve_ground_state(3.0, 1.0, 1);
  const GridPtr g = build_grid(1, 20.0, 799);
  const Field u = soliton_field(cubic(), gs, 0.0, g);
  const Field q = sample_on_grid(gs, g, {0.0, 0.0, 0.0});
  CHECK(u.values.imag().cwiseAbs().maxCoeff() == 0.0);
  CHECK(u.values.real().minCoeff() > 0.0);
  CHECK((u.values - q.values).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("soliton phase, center and cutoff") {
  const GroundState gs = solve_ground_state(3.0, 1.0, 1);
  const GridPtr g = build_grid(1, 20.0, 799, Obstacle::ball(1.0));
  const CutoffPsi psi = build_cutoff(*g, 1.5, 3.0);
  SolitonParams prm = cubic(1.0);
  prm.theta0 = 0.3;
  const double t = 2.0;
  const Field u = soliton_field(prm, gs, t, g, &psi);
  for (Index k = 0; k < g->size(); k += 11) {
    const double x = g->coord(k, 0);
    const double phase = 0.5 * x - 0.25 * t + t + 0.3;
    const cplx expect = psi.psi[k] * q_closed_form_1d(3.0, 1.0, x - t) * std::exp(cplx(0.0, phase));
    CHECK(std::abs(u.values[k] - expect) < 1e-8);
  }
  CHECK(prm.center(t)[0] == 2.0);
  CHECK_THROWS_AS(check_center(prm, *g, 25.0, 1.0), PreconditionError);
}

TEST_CASE("eigenmode field at rest is the mode itself") {
  const GroundState gs = solve_ground_state(7.0, 1.0, 1);
  const GridPtr g = build_grid(1, 20.0, 999);
  const EigenModes m = solve_unstable_pair(assemble(gs, g));
  SolitonParams prm;
  prm.p = 7.0;
  const Field yp = eigenmode_field(prm, m, 0.0, g, nullptr, 1);
  const Field ym = eigenmode_field(prm, m, 0.0, g, nullptr, -1);
  CHECK((yp.values.real() - m.y1).cwiseAbs().maxCoeff() < 1e-6 * m.y1.cwiseAbs().maxCoeff());
  CHECK((yp.values.imag() - m.y2).cwiseAbs().maxCoeff() < 1e-6 * m.y2.cwiseAbs().maxCoeff());
  CHECK((ym.values.imag() + m.y2).cwiseAbs().maxCoeff() < 1e-6 * m.y2.cwiseAbs().maxCoeff());
  CHECK_THROWS_AS(eigenmode_field(prm, m, 0.0, g, nullptr, 0), PreconditionError);
}

TEST_CASE("functionals of zero and of the sech soliton") {
  const GridPtr g = build_grid(1, 30.0, 2999);
  const Functionals z = functionals(Field::zeros(g), cubic());
  CHECK(z.mass == 0.0);
  CHECK(z.energy == 0.0);
  CHECK(z.lyapunov == 0.0);

  // |Q|^2 = 4, |Q'|^2 = 4/3, int Q^4 = 16/3, E(Q) = -2/3
  const GroundState gs = solve_ground_state(3.0, 1.0, 1);
  const Field q = soliton_field(cubic(), gs, 0.0, g);
  const Functionals f = functionals(q, cubic(), 8);
  CHECK(std::abs(f.mass - 4.0) < 1e-10);
  CHECK(std::abs(f.energy + 2.0 / 3.0) < 1e-9);
  const ProfileIntegrals pi = profile_integrals(gs);
  CHECK(pi.mass == Approx(4.0).epsilon(1e-10));
  CHECK(pi.grad2 == Approx(4.0 / 3.0).epsilon(1e-10));
  CHECK(pi.power == Approx(16.0 / 3.0).epsilon(1e-10));
  CHECK(pi.energy == Approx(-2.0 / 3.0).epsilon(1e-10));
}

TEST_CASE("boosted energy identity") {
  const GroundState gs = solve_ground_state(3.0, 1.0, 1);
  const GridPtr g = build_grid(1, 30.0, 2999);
  for (double v : {0.0, 1.0, 2.0}) {
    const Field u = soliton_field(cubic(v), gs, 0.0, g);
    const Functionals f = functionals(u, cubic(v), 8);
    CHECK(std::abs(f.energy - (v * v / 8.0 * 4.0 - 2.0 / 3.0)) < 1e-8);
    CHECK(std::abs(f.momentum[0] - 0.5 * v * 4.0) < 1e-8);
  }
}

TEST_CASE("threshold exponent") {
  CHECK(threshold_exponent(7, 3) == 0.0);
  CHECK(threshold_exponent(3, 1) == 0.5);
  CHECK(threshold_exponent(5, 1) == 1.0);
  CHECK(threshold_exponent(3.0) == 0.5);
  CHECK(threshold_exponent(5.0) == 1.0);
  CHECK(threshold_exponent(7.0) == Approx(1.5 - 2.0 / 6.0).epsilon(1e-15));

  const GroundState gs = solve_ground_state(3.0, 1.0, 1);
  const GridPtr g = build_grid(1, 30.0, 1199);
  const ThresholdReport r = threshold_report(soliton_field(cubic(), gs, 0.0, g), 3.0, gs);
  CHECK(r.s == 0.5);
  CHECK_FALSE(r.outside_range);
  // u = Q: both invariants equal those of Q up to the grid
  CHECK(r.scale_inv_grad == Approx(r.q_scale_inv_grad).epsilon(1e-3));
  CHECK(r.scale_inv_me == Approx(r.q_scale_inv_me).epsilon(1e-3));
  CHECK(threshold_report(Field::zeros(g), 7.0, solve_ground_state(7.0, 1.0, 1)).outside_range);
}

TEST_CASE("galilean boost") {
  const GroundState gs = solve_ground_state(3.0, 1.0, 1);
  const GridPtr g = build_grid(1, 20.0, 799);
  const Field q = soliton_field(cubic(), gs, 0.0, g);
  const Field same = galilean_boost(q, {0.0, 0.0, 0.0}, 1.0);
  CHECK((same.values - q.values).norm() == 0.0);
  // boosting the resting soliton gives the moving one up to the temporal phase
  const double t = 1.0; // shift of exactly 20 cells
  const Field b = galilean_boost(q, {1.0, 0.0, 0.0}, t);
  SolitonParams prm = cubic(1.0);
  const Field m = soliton_field(prm, gs, t, g);
  const cplx rot = std::exp(cplx(0.0, -t)); // remove the omega t of the moving field
  // cells shifted in across the box edge are zero where the tail is ~e^{-21}
  CHECK((b.values - rot * m.values).cwiseAbs().maxCoeff() < 1e-8);
  CHECK_THROWS_AS(galilean_boost(q, {1.0, 0.0, 0.0}, 19.0), PreconditionError);
}
