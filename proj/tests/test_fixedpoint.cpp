// osl: obstacle soliton laboratory
// Copyright (c) 2026 the osl developers

#include "osl/fixedpoint.hpp"
#include "osl/run.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

using namespace osl;
using Catch::Approx;

namespace {

CutoffPsi unit_cutoff(const Grid &g) {
  CutoffPsi c;
  c.psi = RVec::Ones(g.size());
  c.grad_psi.assign(g.dim(), RVec::Zero(g.size()));
  c.lap_psi = RVec::Zero(g.size());
  return c;
}

CVec sine_mode(const Grid &g, int k) {
  CVec u(g.size());
  for (Index j = 0; j < g.size(); ++j) u[j] = std::sin(k * std::numbers::pi * (g.coord(j, 0) + g.L()) / (2 * g.L()));
  return u;
}

PicardResult picard_at(double v, int iters) {
  ExperimentConfig c;
  c.v = {v};
  c.iters = iters;
  const ExperimentConfig r = resolve_config("fixed-point", c);
  const FixedPointSetup fp = fixed_point_setup(r);
  return picard(make_sources(fp.params, fp.gs, fp.psi, fp.grid, fp.picard.Tmax), fp.picard);
}

} // namespace

TEST_CASE("no cutoff means no forcing") {
  const GroundState gs = solve_ground_state(3.0, 1.0, 1);
  const GridPtr g = build_grid(1, 30.0, 1199);
  SolitonParams prm;
  prm.v = {2.0, 0.0, 0.0};
  const SourceSet src = make_sources(prm, gs, unit_cutoff(*g), g, 4.0);
  for (double t : {1.0, 2.5, 4.0}) CHECK(src.A0(t).norm() == 0.0);

  PicardConfig pc;
  pc.T0 = 1.0;
  pc.Tmax = 2.0;
  pc.dt = 0.01;
  pc.iters = 3;
  const PicardResult res = picard(src, pc);
  for (const CVec &r : res.r.values) CHECK(r.norm() == 0.0);
}

TEST_CASE("forcing splits into the stated pieces") {
  const GroundState gs = solve_ground_state(3.0, 1.0, 1);
  const GridPtr g = build_grid(1, 30.0, 1199, Obstacle::ball(1.0));
  SolitonParams prm;
  prm.v = {2.0, 0.0, 0.0};
  prm.x0 = {4.0, 0.0, 0.0};
  const SourceSet src = make_sources(prm, gs, build_cutoff(*g, 1.5, 3.0), g, 4.0);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  CVec r(g->size());
  for (Index k = 0; k < r.size(); ++k) r[k] = 0.01 * cplx(n01(rng), n01(rng));
  const double t = 0.5;
  const CVec sum = src.A0(t) + src.A1(r, t) + src.A2(r, t) + src.A3(r, t);
  CHECK((sum - src.total(r, t)).norm() < 1e-13 * sum.norm());
  // the nonlinear remainder is exact for p = 3
  const CVec R = src.R(t).values;
  auto N = [](const CVec &u) { return CVec(u.array() * u.array().abs2()); };
  const CVec nl = src.A1(r, t) + src.A2(r, t) + src.A3(r, t);
  CHECK((nl + (N(R + r) - N(R))).norm() < 1e-13 * nl.norm());
}

TEST_CASE("Duhamel sweep: zero, linearity and a single mode") {
  const GridPtr g = build_grid(1, 10.0, 199);
  const double dt = 0.01, T0 = 0.0;
  const int K = 200;
  std::vector<CVec> zero(K + 1, CVec::Zero(g->size()));
  for (const CVec &w : duhamel_from_samples(g, zero, T0, dt).values) CHECK(w.norm() == 0.0);

  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  std::vector<CVec> F1(K + 1), F2(K + 1), F12(K + 1);
  for (int k = 0; k <= K; ++k) {
    F1[k] = CVec::NullaryExpr(g->size(), [&] { return cplx(n01(rng), n01(rng)); });
    F2[k] = CVec::NullaryExpr(g->size(), [&] { return cplx(n01(rng), n01(rng)); });
    F12[k] = F1[k] + F2[k];
  }
  const TimeSeries w1 = duhamel_from_samples(g, F1, T0, dt), w2 = duhamel_from_samples(g, F2, T0, dt);
  const TimeSeries w12 = duhamel_from_samples(g, F12, T0, dt);
  for (int k = 0; k <= K; k += 20)
    CHECK((w12.values[k] - w1.values[k] - w2.values[k]).norm() < 1e-10 * w12.values[k].norm() + 1e-14);

  // i w_t + Lap w = f phi with w(Tmax) = 0 gives w = f phi (1 - e^{i lam (t - Tmax)}) / lam
  const int mode = 1;
  const double h = g->h();
  const double lam = -(4.0 / (h * h)) * std::pow(std::sin(mode * std::numbers::pi * h / (4 * g->L())), 2);
  const CVec phi = sine_mode(*g, mode);
  // half the step: |w| reaches 2/|lam| ~ 80 and the CN phase error is O(dt^2)
  std::vector<CVec> F(2 * K + 1, phi);
  const TimeSeries w = duhamel_from_samples(g, F, T0, 0.5 * dt);
  const double Tmax = w.Tmax();
  for (int k = 0; k <= 2 * K; k += 20) {
    const cplx c = (1.0 - std::exp(cplx(0.0, lam * (w.time(k) - Tmax)))) / lam;
    CHECK((w.values[k] - c * phi).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("E-norm") {
  const GridPtr g = build_grid(1, 10.0, 199);
  TimeSeries z{1.0, 0.1, {CVec::Zero(g->size()), CVec::Zero(g->size())}};
  CHECK(e_norm(*g, z, {0.8, 1.0, 2.0}) == 0.0);

  CVec r = sine_mode(*g, 3);
  r /= norm(*g, r, NormKind::L2);
  const double v = std::cbrt(norm(*g, r, NormKind::H2));
  const TimeSeries one{1.5, 0.1, {r}};
  CHECK(e_norm(*g, one, {0.8, 1.0, v}) == Approx(2.0 * std::exp(0.8 * v * 1.5)).epsilon(1e-13));

  TimeSeries decaying{1.0, 0.5, {}};
  for (int k = 0; k < 6; ++k) decaying.values.push_back(r * std::exp(-1.0 * k * 0.5));
  CHECK(e_norm(*g, decaying, {0.9, 1.0, 1.0}) >= e_norm(*g, decaying, {0.5, 1.0, 1.0}));
}

TEST_CASE("interpolation inequality") {
  const GridPtr g = build_grid(1, 10.0, 399);
  CHECK(interpolation_slack(*g, CVec::Zero(g->size())) == 0.0);
  CHECK(interpolation_check(*g, CVec::Zero(g->size())));
  CVec f(g->size());
  for (Index k = 0; k < g->size(); ++k) {
    const double x = g->coord(k, 0);
    f[k] = std::exp(-x * x) * cplx(std::cos(3 * x), x);
  }
  CHECK(interpolation_check(*g, f));
  CHECK(interpolation_slack(*g, f) > 0.0);
  const CVec e = sine_mode(*g, 4);
  const double grad2 = -real_inner(*g, CVec(g->laplacian() * e), e);
  CHECK(std::abs(interpolation_slack(*g, e)) < 1e-12 * grad2);
}

TEST_CASE("decay-rate fit on a synthetic series") {
  const GridPtr g = build_grid(1, 10.0, 199);
  const CVec r = sine_mode(*g, 2);
  TimeSeries s{1.0, 0.05, {}};
  for (int k = 0; k <= 60; ++k) s.values.push_back(r * std::exp(-2.0 * (1.0 + 0.05 * k)));
  CHECK(fit_decay_rate(*g, s, 1.0, 4.0) == Approx(2.0).epsilon(1e-10));
}

TEST_CASE("Picard contracts at high speed and not at low speed") {
  const PicardResult slow = picard_at(1.0, 12);
  CHECK_FALSE(slow.report.contracting);
  CHECK(slow.report.measured_ratio > 1.0);
  CHECK(slow.report.status == "non_contraction");

  const PicardResult fast = picard_at(8.0, 8);
  CHECK(fast.report.contracting);
  CHECK(fast.report.measured_ratio < 0.5);
  CHECK(fast.report.decay_rate >= 0.9 * 0.8 * 8.0);
}

TEST_CASE("first iterate scales like 1/|v|") {
  const double j4 = picard_at(4.0, 3).report.J0 * 4.0;
  const double j8 = picard_at(8.0, 3).report.J0 * 8.0;
  INFO("|v| J0: " << j4 << " " << j8);
  CHECK(j8 <= 1.5 * j4);
}
