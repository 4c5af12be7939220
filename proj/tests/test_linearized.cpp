// osl: obstacle soliton laboratory
// Copyright (c) 2026 the osl developers

#include "osl/linearized.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace osl;
using Catch::Approx;

namespace {

struct Setup {
  GroundState gs;
  GridPtr grid;
  LinearizedPair pair;
};

Setup septic(double L = 25.0, int n = 2499, int stencil = 8) {
  Setup s;
  s.gs = solve_ground_state(7.0, 1.0, 1);
  s.grid = build_grid(1, L, n);
  s.pair = assemble(s.gs, s.grid, stencil);
  return s;
}

double l2(const Grid &g, const RVec &v) { return norm(g, v, NormKind::L2); }

RVec random_vec(Index n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  RVec v(n);
  for (Index k = 0; k < n; ++k) v[k] = n01(rng);
  return v;
}

} // namespace

TEST_CASE("kernels of L- and L+") {
  const Setup s = septic();
  const Grid &g = *s.grid;
  CHECK(l2(g, s.pair.Lminus * s.pair.Q) / norm(g, s.pair.Q, NormKind::H1) < 1e-6);
  CHECK(l2(g, s.pair.Lplus * s.pair.dQ[0]) / norm(g, s.pair.dQ[0], NormKind::H1) < 1e-4);
}

TEST_CASE("operators are symmetric") {
  const Setup s = septic();
  const RVec u = random_vec(s.grid->size(), 1), w = random_vec(s.grid->size(), 2);
  for (const SpMat *A : {&s.pair.Lplus, &s.pair.Lminus}) {
    const double a = real_inner(*s.grid, RVec(*A * u), w), b = real_inner(*s.grid, u, RVec(*A * w));
    CHECK(std::abs(a - b) < 1e-12 * std::abs(a));
  }
}

TEST_CASE("zero potential gives the free operator") {
  const GroundState gs = solve_ground_state(7.0, 1.0, 1);
  const GridPtr g = build_grid(1, 20.0, 399);
  const LinearizedPair pair = assemble_with_potential(gs, g, RVec::Zero(g->size()));
  CHECK((pair.Lplus - pair.Lminus).norm() == 0.0);
  CHECK(lowest_eigenvalue_Lplus(pair) >= 1.0);
}

TEST_CASE("coarse grid is rejected") {
  const GroundState gs = solve_ground_state(7.0, 1.0, 1);
  CHECK_THROWS_AS(assemble(gs, build_grid(1, 20.0, 39)), PreconditionError);
  CHECK_THROWS_AS(assemble(gs, build_grid(1, 20.0, 399, Obstacle::ball(1.0))), PreconditionError);
}

TEST_CASE("cubic 1D is spectrally stable") {
  const GroundState gs = solve_ground_state(3.0, 1.0, 1);
  const LinearizedPair pair = assemble(gs, build_grid(1, 20.0, 999));
  CHECK_THROWS_AS(solve_unstable_pair(pair), SpectrallyStable);
}

TEST_CASE("unstable eigenvalue matches a dense block eigensolve") {
  // numpy eigvals of [[0, -L-], [L+, 0]] at N = 512, L = 20, second-order
  // stencil, see tests/oracles/oracles.py
  const Setup s = septic(20.0, 512, 2);
  const EigenModes m = solve_unstable_pair(s.pair);
  CHECK(m.e0 == Approx(2.9275437276448573).epsilon(1e-4));
  CHECK(m.e0 == Approx(2.9275437276448573).epsilon(1e-9));
  CHECK(lowest_eigenvalue_Lplus(s.pair) == Approx(-15.037824195988463).epsilon(1e-9));
}

TEST_CASE("eigenpair relations and normalization") {
  const Setup s = septic();
  const EigenModes m = solve_unstable_pair(s.pair);
  const Grid &g = *s.grid;
  const double hn = std::hypot(norm(g, m.y1, NormKind::H1), norm(g, m.y2, NormKind::H1));
  CHECK(l2(g, s.pair.Lplus * m.y1 - m.e0 * m.y2) / hn < 1e-6);
  CHECK(l2(g, s.pair.Lminus * m.y2 + m.e0 * m.y1) / hn < 1e-6);
  CHECK(m.pairing == Approx(1.0).epsilon(1e-13));
  CHECK(-2.0 * real_inner(g, m.y1, m.y2) == Approx(1.0).epsilon(1e-13));
  CHECK(m.e0 * m.e0 == Approx(m.rayleigh_e2).epsilon(1e-12));
  // the continuum limit of the order-8 discretization
  CHECK(m.e0 == Approx(2.905088).epsilon(1e-6));
  // even modes
  const Index n = g.size();
  for (Index k = 0; k < n / 2; k += 37) CHECK(std::abs(m.y1[k] - m.y1[n - 1 - k]) < 1e-10 * m.y1.cwiseAbs().maxCoeff());
}

TEST_CASE("rescaled modes") {
  const Setup s = septic(20.0, 999, 8);
  const EigenModes m = solve_unstable_pair(s.pair);
  const ScaledModes same = rescale_modes(m, 1.0, s.pair);
  CHECK(same.e_rayleigh == Approx(m.e0).epsilon(1e-8));
  CHECK((same.modes.y1 - m.y1).norm() < 1e-10 * m.y1.norm());

  const GroundState g2 = rescale(s.gs, 2.0);
  const GridPtr grid2 = build_grid(1, 20.0 / std::sqrt(2.0), 999);
  const LinearizedPair p2 = assemble(g2, grid2, 8);
  const ScaledModes sc = rescale_modes(m, 2.0, p2);
  CHECK(sc.residual < 1e-5);
  CHECK(sc.pairing == Approx(1.0).epsilon(1e-6));
  CHECK(sc.e_rayleigh == Approx(2.0 * m.e0).epsilon(1e-6));
  CHECK(sc.e_rayleigh == Approx(solve_unstable_pair(p2).e0).epsilon(1e-6));
  CHECK_THROWS_AS(rescale_modes(m, -1.0, p2), PreconditionError);
}

TEST_CASE("coercivity under the constraints") {
  const Setup s = septic(20.0, 999, 8);
  const EigenModes m = solve_unstable_pair(s.pair);
  const CoercivityCertificate cert = coercivity_certificate(s.pair, m);
  CHECK(cert.certified);
  CHECK(cert.lambda_min > 0.0);
  // regression baseline at this grid
  CHECK(cert.lambda_min == Approx(0.1882).margin(2e-3));
  CHECK(lowest_eigenvalue_Lplus(s.pair) < 0.0);

  // h = (0, Q) sits in the kernel and breaks (h2, Q) = 0
  const RVec zero = RVec::Zero(s.grid->size());
  CHECK(std::abs(quadratic_form(s.pair, zero, s.pair.Q)) < 1e-6 * real_inner(*s.grid, s.pair.Q, s.pair.Q));
  RVec h1 = zero, h2 = s.pair.Q;
  project_constraints(s.pair, m, h1, h2);
  CHECK(h2.norm() < 1e-8 * s.pair.Q.norm());

  std::mt19937_64 rng(7);
  std::normal_distribution<double> n01;
  for (int k = 0; k < 25; ++k) {
    RVec a(s.grid->size()), b(s.grid->size());
    for (Index j = 0; j < a.size(); ++j) {
      a[j] = n01(rng) * s.pair.Q[j];
      b[j] = n01(rng) * s.pair.Q[j];
    }
    project_constraints(s.pair, m, a, b);
    const double nn = std::hypot(norm(*s.grid, a, NormKind::H1), norm(*s.grid, b, NormKind::H1));
    a /= nn;
    b /= nn;
    CHECK(quadratic_form(s.pair, a, b) >= cert.lambda_min - 1e-8);
  }
}

TEST_CASE("biorthogonal family") {
  const Setup s = septic(20.0, 999, 8);
  const EigenModes m = solve_unstable_pair(s.pair);
  const BiorthogonalFamily f = biorthogonal_family(s.pair, m);
  CHECK(f.max_offdiag < 1e-8);
  CHECK(std::abs(f.pairing(0, 1)) < 1e-8 * std::abs(f.zeta[0]));
  // zeta_1 = Im int Y+ conj(Y-) = 2 int y1 y2, evaluated both ways
  const CVec Yp = m.y1.cast<cplx>() + cplx(0, 1) * m.y2.cast<cplx>();
  const CVec Ym = m.y1.cast<cplx>() - cplx(0, 1) * m.y2.cast<cplx>();
  const double direct = (Yp.array() * Ym.conjugate().array()).sum().imag() * s.grid->cell_volume();
  CHECK(std::abs(f.zeta[0] - direct) < 1e-10);
  CHECK(std::abs(direct - 2.0 * real_inner(*s.grid, m.y1, m.y2)) < 1e-10);
  CHECK(f.zeta[2] == Approx(real_inner(*s.grid, s.pair.dQ[0], s.pair.dQ[0])).epsilon(1e-14));
  CHECK(f.zeta[2] > 0.0);
}
