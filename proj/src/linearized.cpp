// osl: obstacle soliton laboratory
// Copyright (c) 2026 the osl developers

#include "osl/linearized.hpp"
#include "osl/lobpcg.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <cmath>
#include <random>
#include <limits>
#include <sstream>
#include <tuple>

namespace osl {

namespace {

// Orthonormal basis of a few constraint vectors; apply() removes their span.
struct ConstraintBasis {
  Eigen::MatrixXd U;
  explicit ConstraintBasis(const std::vector<RVec> &cols) {
    Eigen::MatrixXd C(cols.front().size(), cols.size());
    for (std::size_t j = 0; j < cols.size(); ++j) C.col(j) = cols[j];
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(C);
    U = qr.householderQ() * Eigen::MatrixXd::Identity(C.rows(), C.cols());
  }
  void apply(RVec &v) const { v -= U * (U.transpose() * v); }
};

SpMat identity(Index n) {
  SpMat I(n, n);
  I.setIdentity();
  return I;
}

SpMat diagonal(const RVec &d) {
  SpMat D(d.size(), d.size());
  std::vector<Eigen::Triplet<double>> t;
  for (Index k = 0; k < d.size(); ++k) t.emplace_back(k, k, d[k]);
  D.setFromTriplets(t.begin(), t.end());
  return D;
}

double h1_pair_norm(const Grid &g, const RVec &a, const RVec &b) {
  const double na = norm(g, a, NormKind::H1), nb = norm(g, b, NormKind::H1);
  return std::sqrt(na * na + nb * nb);
}

RadialSamples extract_profile(const Grid &g, const RVec &f) {
  RadialSamples s;
  s.dr = g.h();
  const int n = g.n();
  if (g.dim() > 1 && n % 2 == 0) throw PreconditionError("mode profiles in d > 1 need an odd number of nodes per axis");
  const int first = n / 2; // x = 0 when n is odd, x = h/2 otherwise
  const int mid = (n - 1) / 2;
  s.r0 = g.node(first);
  if (std::abs(s.r0) < 1e-12 * s.dr) s.r0 = 0.0;
  for (int i = first; i < n; ++i) {
    const Index k = g.dim() == 1 ? g.active_at(i) : g.dim() == 2 ? g.active_at(i, mid) : g.active_at(i, mid, mid);
    s.f.push_back(k >= 0 ? f[k] : 0.0);
  }
  return s;
}

Eigen::MatrixXd seeded_block(Index n, Index m, const RVec &shape, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(0.0, 1.0);
  Eigen::MatrixXd X(n, m);
  // column 0 keeps the shape's sign so projection off the shape leaves noise
  for (Index k = 0; k < n; ++k) X(k, 0) = shape[k] * (1.0 + 0.5 * N(rng));
  for (Index j = 1; j < m; ++j)
    for (Index k = 0; k < n; ++k) X(k, j) = shape[k] * N(rng);
  return X;
}

} // namespace

double RadialSamples::value(double r) const {
  if (f.empty()) return 0.0;
  const double s = (r - r0) / dr;
  const long j = static_cast<long>(std::floor(s));
  const double t = s - j;
  const bool through_zero = r0 == 0.0;
  auto g = [&](long i) -> double {
    if (i < 0) i = through_zero ? -i : -i - 1;
    return i < static_cast<long>(f.size()) ? f[i] : 0.0;
  };
  if (j + 1 >= static_cast<long>(f.size())) return 0.0;
  const double wm = -t * (t - 1.0) * (t - 2.0) / 6.0;
  const double w0 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
  const double w1 = -(t + 1.0) * t * (t - 2.0) / 2.0;
  const double w2 = (t + 1.0) * t * (t - 1.0) / 6.0;
  return wm * g(j - 1) + w0 * g(j) + w1 * g(j + 1) + w2 * g(j + 2);
}

RVec sample_mode(const RadialSamples &prof, const Grid &grid, const Vec3 &center, double amplitude,
                 double radial_scale) {
  RVec out(grid.size());
  for (Index k = 0; k < grid.size(); ++k) {
    double r2 = 0.0;
    for (int ax = 0; ax < grid.dim(); ++ax) {
      const double d = grid.coord(k, ax) - center[ax];
      r2 += d * d;
    }
    out[k] = amplitude * prof.value(radial_scale * std::sqrt(r2));
  }
  return out;
}

LinearizedPair assemble_with_potential(const GroundState &gs, const GridPtr &grid, const RVec &potential,
                                       int stencil) {
  if (grid->obstacle().present()) throw PreconditionError("spectral work runs on the whole-space box (no obstacle)");
  LinearizedPair pair;
  pair.ground = gs;
  pair.grid = grid;
  sample_profile(gs, *grid, {0.0, 0.0, 0.0}, pair.Q, &pair.dQ);
  pair.potential = potential;
  pair.stencil = stencil;
  const SpMat base = -laplacian_matrix(*grid, stencil) + gs.omega * identity(grid->size());
  pair.Lplus = base - gs.p * diagonal(potential);
  pair.Lminus = base - diagonal(potential);
  return pair;
}

LinearizedPair assemble(const GroundState &gs, const GridPtr &grid, int stencil) {
  RVec Q;
  sample_profile(gs, *grid, {0.0, 0.0, 0.0}, Q);
  for (Index k = 0; k < grid->size(); ++k)
    for (int ax = 0; ax < grid->dim(); ++ax) {
      const Index m = grid->neighbor(k, ax, 1);
      if (m >= 0 && std::abs(Q[m] - Q[k]) > 0.2 * gs.q0)
        throw PreconditionError("grid too coarse: ground state changes by more than 20% per cell");
    }
  return assemble_with_potential(gs, grid, Q.array().pow(gs.p - 1.0).matrix(), stencil);
}

EigenModes solve_unstable_pair(const LinearizedPair &pair, double tol) {
  const Grid &g = *pair.grid;
  const Index n = g.size();
  const double omega = pair.ground.omega;
  const SpMat A = pair.Lminus * pair.Lplus;

  std::vector<RVec> defl{pair.Q};
  for (const RVec &d : pair.dQ) defl.push_back(d);
  RVec y = pair.Q.array().pow(pair.ground.p).matrix();
  ConstraintBasis(defl).apply(y);
  y.normalize();
  const RVec seed = y;

  // Inverse iteration returns the eigenvalue nearest to the shift.  Shifts
  // walk geometrically down to the square of the largest potential term,
  // which bounds e0^2; the most negative value seen is polished with a
  // close shift.
  double anorm = 0.0;
  for (Index k = 0; k < A.outerSize(); ++k) {
    double col = 0.0;
    for (SpMat::InnerIterator it(A, k); it; ++it) col += std::abs(it.value());
    anorm = std::max(anorm, col);
  }
  // relative residuals below this are roundoff in applying A
  auto floor_at = [&](double lam) {
    return 64.0 * std::numeric_limits<double>::epsilon() * anorm / std::max(std::abs(lam), omega * omega);
  };
  auto inverse_iteration = [&](double sigma, double tol_it, int max_it) {
    Eigen::SparseLU<SpMat> lu;
    lu.compute(A - sigma * identity(n));
    if (lu.info() != Eigen::Success) throw NumericalError("shift-invert factorization failed");
    double lam = 0.0, res = 1.0;
    for (int it = 0; it < max_it && res > std::max(tol_it, floor_at(lam)); ++it) {
      const RVec z = lu.solve(y);
      y = z / z.norm();
      const RVec Ay = A * y;
      lam = y.dot(Ay);
      res = (Ay - lam * y).norm() / std::max(std::abs(lam), omega * omega);
    }
    return std::make_pair(lam, res);
  };
  const double vmax = pair.ground.p * pair.potential.maxCoeff() + omega;
  double lambda = 0.0, res = 1.0;
  RVec best = seed;
  for (double sigma = -omega * omega; sigma >= -4.0 * vmax * vmax; sigma *= 4.0) {
    y = seed;
    const auto [lam, r] = inverse_iteration(sigma, 1e-8, 400);
    if (lam < lambda) {
      lambda = lam;
      res = r;
      best = y;
    }
  }
  y = best;
  if (lambda < -0.1 * omega * omega) std::tie(lambda, res) = inverse_iteration(1.05 * lambda, tol, 500);
  if (res > std::max(1e3 * tol, floor_at(lambda)) && lambda < -0.1 * omega * omega) {
    std::ostringstream msg;
    msg << "shift-invert iteration stalled (residual " << res << ")";
    throw NumericalError(msg.str());
  }
  if (!(lambda < -0.1 * omega * omega)) {
    std::ostringstream msg;
    msg << "spectrally stable configuration: most negative eigenvalue of L-L+ is " << lambda;
    throw SpectrallyStable(msg.str());
  }

  EigenModes m;
  m.omega = omega;
  m.p = pair.ground.p;
  m.dim = g.dim();
  m.grid = pair.grid;
  m.e0 = std::sqrt(-lambda);
  m.rayleigh_e2 = -lambda;
  m.y1 = y;
  m.y2 = pair.Lplus * y / m.e0;
  const double raw = -2.0 * real_inner(g, m.y1, m.y2);
  if (!(raw > 0.0)) throw NumericalError("unstable pair has non-positive pairing");
  Index imax = 0;
  m.y1.cwiseAbs().maxCoeff(&imax);
  const double s = (m.y1[imax] > 0.0 ? 1.0 : -1.0) / std::sqrt(raw);
  m.y1 *= s;
  m.y2 *= s;
  m.pairing = -2.0 * real_inner(g, m.y1, m.y2);
  const double hn = h1_pair_norm(g, m.y1, m.y2);
  m.residual_plus = norm(g, RVec(pair.Lplus * m.y1 - m.e0 * m.y2), NormKind::L2) / hn;
  m.residual_minus = norm(g, RVec(pair.Lminus * m.y2 + m.e0 * m.y1), NormKind::L2) / hn;
  m.overlap_Q = std::abs(m.y1.dot(pair.Q)) / (m.y1.norm() * pair.Q.norm());
  m.profile1 = extract_profile(g, m.y1);
  m.profile2 = extract_profile(g, m.y2);
  return m;
}

ScaledModes rescale_modes(const EigenModes &modes, double omega, const LinearizedPair &pair_omega) {
  if (!(omega > 0.0)) throw PreconditionError("rescale_modes needs omega > 0");
  if (modes.omega != 1.0) throw PreconditionError("rescale_modes expects omega = 1 modes");
  if (std::abs(pair_omega.ground.omega - omega) > 1e-14 * omega)
    throw PreconditionError("operator pair is at a different frequency");
  const Grid &g = *pair_omega.grid;
  const double amp = std::pow(omega, 0.25), root = std::sqrt(omega);
  ScaledModes out;
  out.modes = modes;
  out.modes.omega = omega;
  out.modes.grid = pair_omega.grid;
  out.modes.y1 = sample_mode(modes.profile1, g, {0, 0, 0}, amp, root);
  out.modes.y2 = sample_mode(modes.profile2, g, {0, 0, 0}, amp, root);
  out.modes.profile1 = extract_profile(g, out.modes.y1);
  out.modes.profile2 = extract_profile(g, out.modes.y2);
  const RVec &y1 = out.modes.y1, &y2 = out.modes.y2;
  const RVec Ly1 = pair_omega.Lplus * y1;
  const double e2 = -y1.dot(pair_omega.Lminus * Ly1) / y1.dot(y1);
  out.e_rayleigh = std::sqrt(std::max(e2, 0.0));
  out.modes.e0 = out.e_rayleigh;
  out.e_linear = omega * modes.e0;
  out.e_claimed = std::pow(omega, 1.5) * modes.e0;
  out.pairing = -2.0 * real_inner(g, y1, y2);
  out.modes.pairing = out.pairing;
  const double hn = h1_pair_norm(g, y1, y2);
  out.residual = (norm(g, RVec(Ly1 - out.e_rayleigh * y2), NormKind::L2) +
                  norm(g, RVec(pair_omega.Lminus * y2 + out.e_rayleigh * y1), NormKind::L2)) /
                 hn;
  return out;
}

double quadratic_form(const LinearizedPair &pair, const RVec &h1, const RVec &h2) {
  return real_inner(*pair.grid, RVec(pair.Lplus * h1), h1) + real_inner(*pair.grid, RVec(pair.Lminus * h2), h2);
}

void project_constraints(const LinearizedPair &pair, const EigenModes &modes, RVec &h1, RVec &h2) {
  std::vector<RVec> c1 = pair.dQ;
  c1.push_back(modes.y2);
  ConstraintBasis(c1).apply(h1);
  ConstraintBasis({pair.Q, modes.y1}).apply(h2);
}

CoercivityCertificate coercivity_certificate(const LinearizedPair &pair, const EigenModes &modes) {
  const Grid &g = *pair.grid;
  const Index n = g.size();
  const SpMat gram = identity(n) - g.laplacian();
  Eigen::SimplicialLDLT<SpMat> gram_inv(gram);
  if (gram_inv.info() != Eigen::Success) throw NumericalError("H1 Gram factorization failed");
  const VecOp B = [&](const RVec &x) { return RVec(gram * x); };
  const VecOp T = [&](const RVec &x) { return RVec(gram_inv.solve(x)); };

  std::vector<RVec> c1 = pair.dQ;
  c1.push_back(modes.y2);
  const ConstraintBasis P1(c1), P2({pair.Q, modes.y1});
  const VecOp A1 = [&](const RVec &x) { return RVec(pair.Lplus * x); };
  const VecOp A2 = [&](const RVec &x) { return RVec(pair.Lminus * x); };

  const LobpcgResult r1 = lobpcg_min(A1, B, T, [&](RVec &v) { P1.apply(v); },
                                     seeded_block(n, 3, pair.Q, 11), 1e-11, 2000);
  const LobpcgResult r2 = lobpcg_min(A2, B, T, [&](RVec &v) { P2.apply(v); },
                                     seeded_block(n, 3, pair.Q, 12), 1e-11, 2000);
  if (!r1.converged || !r2.converged) throw NumericalError("coercivity LOBPCG did not converge");

  CoercivityCertificate c;
  c.lambda_plus = r1.lambda[0];
  c.lambda_minus = r2.lambda[0];
  c.iterations = r1.iterations + r2.iterations;
  // Ritz vectors are Gram-orthonormal in the unscaled sum; rescale to unit H1
  const double cell = std::sqrt(g.cell_volume());
  if (c.lambda_plus <= c.lambda_minus) {
    c.lambda_min = c.lambda_plus;
    c.h1 = r1.x.col(0) / cell;
    c.h2 = RVec::Zero(n);
  } else {
    c.lambda_min = c.lambda_minus;
    c.h1 = RVec::Zero(n);
    c.h2 = r2.x.col(0) / cell;
  }
  c.certified = c.lambda_min > 0.0;
  if (!c.certified) {
    std::ostringstream msg;
    msg << "coercivity certificate failed: constrained minimum " << c.lambda_min << " attained in the "
        << (c.lambda_plus <= c.lambda_minus ? "L+ (real part)" : "L- (imaginary part)") << " block";
    throw NumericalError(msg.str());
  }
  return c;
}

double lowest_eigenvalue_Lplus(const LinearizedPair &pair) {
  // inverse iteration below the Gershgorin floor omega - p max V, where
  // L+ - sigma is positive definite
  const Index n = pair.grid->size();
  const double sigma = pair.ground.omega - pair.ground.p * pair.potential.maxCoeff() - 1.0;
  Eigen::SimplicialLDLT<SpMat> ldlt(SpMat(pair.Lplus - sigma * identity(n)));
  if (ldlt.info() != Eigen::Success) throw NumericalError("L+ shift factorization failed");
  RVec y = pair.Q / pair.Q.norm();
  double lam = y.dot(pair.Lplus * y);
  for (int it = 0; it < 500; ++it) {
    const RVec z = ldlt.solve(y);
    y = z / z.norm();
    const RVec Ly = pair.Lplus * y;
    lam = y.dot(Ly);
    if ((Ly - lam * y).norm() <= 1e-10 * std::max(1.0, std::abs(lam))) return lam;
  }
  throw NumericalError("L+ ground eigenvalue did not converge");
}

BiorthogonalFamily biorthogonal_family(const LinearizedPair &pair, const EigenModes &modes) {
  const Grid &g = *pair.grid;
  const cplx I(0.0, 1.0);
  const CVec y1 = modes.y1.cast<cplx>(), y2 = modes.y2.cast<cplx>(), Q = pair.Q.cast<cplx>();
  BiorthogonalFamily f;
  const CVec Yp = y1 + I * y2, Ym = y1 - I * y2;
  f.phi = {Yp, Ym};
  f.mu = {CVec(I * Ym), CVec(I * Yp)};
  for (const RVec &d : pair.dQ) {
    f.phi.push_back(d.cast<cplx>());
    f.mu.push_back(d.cast<cplx>());
  }
  const CVec iQ = I * Q;
  const double z1 = real_inner(g, f.phi[0], f.mu[0]);
  const double z2 = real_inner(g, f.phi[1], f.mu[1]);
  if (std::abs(z1) < 1e-10 || std::abs(z2) < 1e-10) throw NumericalError("degenerate biorthogonal family");
  const double c1 = real_inner(g, f.phi[0], iQ), c2 = real_inner(g, f.phi[1], iQ);
  f.phi.push_back(iQ);
  f.mu.push_back(iQ - f.mu[0] * (c1 / z1) - f.mu[1] * (c2 / z2));
  const CVec literal = iQ - f.mu[0] * c1 - f.mu[1] * c2;

  const std::size_t m = f.phi.size();
  f.pairing.resize(m, m);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t k = 0; k < m; ++k) f.pairing(j, k) = real_inner(g, f.phi[j], f.mu[k]);
  f.zeta = f.pairing.diagonal();
  for (std::size_t j = 0; j < m; ++j) {
    if (std::abs(f.zeta[j]) < 1e-10) throw NumericalError("degenerate biorthogonal family");
    for (std::size_t k = 0; k < m; ++k)
      if (j != k) f.max_offdiag = std::max(f.max_offdiag, std::abs(f.pairing(j, k)) / std::abs(f.zeta[j]));
  }
  for (std::size_t j = 0; j + 1 < m; ++j)
    f.literal_defect = std::max(f.literal_defect, std::abs(real_inner(g, f.phi[j], literal)) / std::abs(f.zeta[j]));
  return f;
}

} // namespace osl
