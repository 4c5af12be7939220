// osl: obstacle soliton laboratory
// Copyright (c) 2026 the osl developers

#include "osl/grid.hpp"
#include "osl/error.hpp"

#include <json.hpp>

#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

namespace osl {

namespace {

constexpr std::array<double, 5> kLap8 = {-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0};
constexpr std::array<double, 5> kGrad8 = {0.0, 4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0};

void require_same_grid(const Field &u, const Field &w) {
  if (u.grid != w.grid && (u.grid == nullptr || w.grid == nullptr || u.grid->size() != w.grid->size() ||
                           u.grid->h() != w.grid->h() || u.grid->dim() != w.grid->dim()))
    throw PreconditionError("fields live on different grids");
}

} // namespace

Grid::Grid(int dim, double L, int n, Obstacle obstacle)
    : dim_(dim), L_(L), n_(n), h_(2.0 * L / (n + 1)), cell_(std::pow(2.0 * L / (n + 1), dim)),
      obstacle_(obstacle) {
  const int nj = dim >= 2 ? n : 1;
  const int nl = dim >= 3 ? n : 1;
  active_of_site_.assign(static_cast<std::size_t>(n) * nj * nl, -1);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < nj; ++j)
      for (int l = 0; l < nl; ++l) {
        double r2 = node(i) * node(i);
        if (dim >= 2) r2 += node(j) * node(j);
        if (dim >= 3) r2 += node(l) * node(l);
        if (obstacle.present() && std::sqrt(r2) <= obstacle.a) continue;
        active_of_site_[(static_cast<std::size_t>(i) * nj + j) * nl + l] = static_cast<Index>(lattice_.size());
        lattice_.push_back({i, j, l});
      }

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(lattice_.size() * (2 * dim + 1));
  const double ih2 = 1.0 / (h_ * h_);
  for (Index k = 0; k < size(); ++k) {
    trip.emplace_back(k, k, -2.0 * dim * ih2);
    for (int ax = 0; ax < dim; ++ax)
      for (int s : {-1, 1}) {
        const Index m = neighbor(k, ax, s);
        if (m >= 0) trip.emplace_back(k, m, ih2);
      }
  }
  lap_.resize(size(), size());
  lap_.setFromTriplets(trip.begin(), trip.end());
}

Vec3 Grid::position(Index k) const {
  Vec3 x{0.0, 0.0, 0.0};
  for (int ax = 0; ax < dim_; ++ax) x[ax] = coord(k, ax);
  return x;
}

double Grid::radius(Index k) const {
  double r2 = 0.0;
  for (int ax = 0; ax < dim_; ++ax) r2 += coord(k, ax) * coord(k, ax);
  return std::sqrt(r2);
}

Index Grid::active_at(int i, int j, int l) const {
  if (i < 0 || i >= n_) return -1;
  const int nj = dim_ >= 2 ? n_ : 1;
  const int nl = dim_ >= 3 ? n_ : 1;
  if (j < 0 || j >= nj || l < 0 || l >= nl) return -1;
  return active_of_site_[(static_cast<std::size_t>(i) * nj + j) * nl + l];
}

Index Grid::neighbor(Index k, int axis, int step) const {
  std::array<int, 3> s = lattice_[k];
  s[axis] += step;
  return active_at(s[0], s[1], s[2]);
}

GridPtr build_grid(int dim, double L, int n, Obstacle obstacle) {
  if (dim < 1 || dim > 3) throw PreconditionError("dim must be 1, 2 or 3");
  if (n < 16) throw PreconditionError("n must be at least 16 (got " + std::to_string(n) + ")");
  if (!(L > 0.0)) throw PreconditionError("L must be positive");
  if (obstacle.present()) {
    if (!(obstacle.a > 0.0)) throw PreconditionError("obstacle radius must be positive");
    if (L <= obstacle.a) throw PreconditionError("obstacle swallows the domain (L <= a)");
    if (L <= 4.0 * obstacle.a) throw PreconditionError("box too small for obstacle (need L > 4a)");
  }
  auto g = std::make_shared<const Grid>(dim, L, n, obstacle);
  if (obstacle.present()) {
    // active nodes on the positive x1 half-axis between obstacle and box edge
    int count = 0;
    for (int i = 0; i < n; ++i)
      if (g->node(i) > obstacle.a) ++count;
    if (count < 8) throw PreconditionError("fewer than 8 active nodes per axis outside the obstacle");
  }
  return g;
}

SpMat laplacian_matrix(const Grid &g, int order) {
  if (order == 2) return g.laplacian();
  if (order != 8) throw PreconditionError("laplacian order must be 2 or 8");
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(g.size() * (8 * g.dim() + 1));
  const double ih2 = 1.0 / (g.h() * g.h());
  for (Index k = 0; k < g.size(); ++k) {
    trip.emplace_back(k, k, g.dim() * kLap8[0] * ih2);
    for (int ax = 0; ax < g.dim(); ++ax)
      for (int s : {-1, 1})
        for (int m = 1; m <= 4; ++m) {
          const Index q = g.neighbor(k, ax, s * m);
          if (q < 0) break; // zero extension stops at the first masked site
          trip.emplace_back(k, q, kLap8[m] * ih2);
        }
  }
  SpMat A(g.size(), g.size());
  A.setFromTriplets(trip.begin(), trip.end());
  return A;
}

std::vector<SpMat> gradient_matrices(const Grid &g, int order) {
  if (order != 2 && order != 8) throw PreconditionError("gradient order must be 2 or 8");
  std::vector<SpMat> out;
  const double ih = 1.0 / g.h();
  for (int ax = 0; ax < g.dim(); ++ax) {
    std::vector<Eigen::Triplet<double>> trip;
    for (Index k = 0; k < g.size(); ++k) {
      if (order == 2) {
        const Index up = g.neighbor(k, ax, 1);
        const Index dn = g.neighbor(k, ax, -1);
        if (up >= 0 && dn >= 0) {
          trip.emplace_back(k, up, 0.5 * ih);
          trip.emplace_back(k, dn, -0.5 * ih);
        } else if (up >= 0) {
          trip.emplace_back(k, up, ih);
          trip.emplace_back(k, k, -ih);
        } else if (dn >= 0) {
          trip.emplace_back(k, k, ih);
          trip.emplace_back(k, dn, -ih);
        }
        continue;
      }
      for (int s : {-1, 1})
        for (int m = 1; m <= 4; ++m) {
          const Index q = g.neighbor(k, ax, s * m);
          if (q < 0) break;
          trip.emplace_back(k, q, s * kGrad8[m] * ih);
        }
    }
    SpMat D(g.size(), g.size());
    D.setFromTriplets(trip.begin(), trip.end());
    out.push_back(std::move(D));
  }
  return out;
}

Field laplacian_dirichlet(const Field &u) {
  return {u.grid, u.grid->laplacian() * u.values};
}

std::vector<Field> gradient(const Field &u) {
  std::vector<Field> out;
  for (const SpMat &D : gradient_matrices(*u.grid, 2)) out.push_back({u.grid, D * u.values});
  return out;
}

double real_inner(const Grid &g, const CVec &u, const CVec &w) {
  if (u.size() != w.size()) throw PreconditionError("inner product of fields with different sizes");
  double acc = 0.0;
  for (Index k = 0; k < u.size(); ++k) acc += u[k].real() * w[k].real() + u[k].imag() * w[k].imag();
  return acc * g.cell_volume();
}

double real_inner(const Grid &g, const RVec &u, const RVec &w) {
  if (u.size() != w.size()) throw PreconditionError("inner product of fields with different sizes");
  return u.dot(w) * g.cell_volume();
}

double real_inner(const Field &u, const Field &w) {
  require_same_grid(u, w);
  return real_inner(*u.grid, u.values, w.values);
}

double norm(const Grid &g, const CVec &u, NormKind kind) {
  const double l2 = u.squaredNorm() * g.cell_volume();
  if (kind == NormKind::L2) return std::sqrt(l2);
  const CVec lu = g.laplacian() * u;
  const double grad2 = -real_inner(g, lu, u);
  if (kind == NormKind::H1) return std::sqrt(l2 + grad2);
  return std::sqrt(l2 + grad2 + lu.squaredNorm() * g.cell_volume());
}

double norm(const Grid &g, const RVec &u, NormKind kind) {
  return norm(g, CVec(u.cast<cplx>()), kind);
}

double norm(const Field &u, NormKind kind) { return norm(*u.grid, u.values, kind); }

RampValue cutoff_profile(double r, double R1, double R2) {
  const double w = R2 - R1;
  if (r <= R1) return {0.0, 0.0, 0.0};
  if (r >= R2) return {1.0, 0.0, 0.0};
  const double t = (r - R1) / w;
  // evaluate from the nearer end so rounding cannot leave [0, 1]
  const double u = t <= 0.5 ? t : 1.0 - t;
  const double su = u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
  const double s = t <= 0.5 ? su : 1.0 - su;
  const double ds = 30.0 * t * t * (1.0 - t) * (1.0 - t) / w;
  const double d2s = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t) / (w * w);
  return {s, ds, d2s};
}

CutoffPsi build_cutoff(const Grid &g, double R1, double R2) {
  const double a = g.obstacle().present() ? g.obstacle().a : 0.0;
  if (R1 <= a) throw PreconditionError("cutoff inner radius R1 must exceed the obstacle radius");
  if (!(R2 > R1)) throw PreconditionError("cutoff needs R1 < R2");
  if (R2 >= 0.5 * g.L()) throw PreconditionError("cutoff outer radius R2 must be below L/2");
  CutoffPsi c;
  c.R1 = R1;
  c.R2 = R2;
  c.psi.resize(g.size());
  c.lap_psi.resize(g.size());
  c.grad_psi.assign(g.dim(), RVec::Zero(g.size()));
  for (Index k = 0; k < g.size(); ++k) {
    const double r = g.radius(k);
    const RampValue s = cutoff_profile(r, R1, R2);
    c.psi[k] = s.s;
    c.lap_psi[k] = s.d2s + (r > 0.0 ? (g.dim() - 1) * s.ds / r : 0.0);
    for (int ax = 0; ax < g.dim(); ++ax) c.grad_psi[ax][k] = r > 0.0 ? s.ds * g.coord(k, ax) / r : 0.0;
  }
  return c;
}

RVec psi_or_one(const Grid &g, const CutoffPsi *psi) {
  return psi ? psi->psi : RVec::Ones(g.size());
}

void save_field(const std::string &path, const Field &u, double R1, double R2) {
  static_assert(std::endian::native == std::endian::little, "field files are written in host order");
  const Grid &g = *u.grid;
  nlohmann::json header = {{"dim", g.dim()},
                           {"L", g.L()},
                           {"n", g.n()},
                           {"obstacle_a", g.obstacle().present() ? g.obstacle().a : 0.0},
                           {"R1", R1},
                           {"R2", R2}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PreconditionError("cannot open " + path + " for writing");
  out << header.dump() << '\n';
  const int nj = g.dim() >= 2 ? g.n() : 1;
  const int nl = g.dim() >= 3 ? g.n() : 1;
  for (int i = 0; i < g.n(); ++i)
    for (int j = 0; j < nj; ++j)
      for (int l = 0; l < nl; ++l) {
        const Index k = g.active_at(i, j, l);
        const cplx z = k >= 0 ? u.values[k] : cplx(0.0, 0.0);
        const float pair[2] = {static_cast<float>(z.real()), static_cast<float>(z.imag())};
        out.write(reinterpret_cast<const char *>(pair), sizeof(pair));
      }
}

LoadedField load_field(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PreconditionError("cannot open field file " + path);
  std::string line;
  std::getline(in, line);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const std::exception &e) {
    throw PreconditionError("bad field header in " + path + ": " + e.what());
  }
  const double a = header.at("obstacle_a").get<double>();
  GridPtr g = build_grid(header.at("dim").get<int>(), header.at("L").get<double>(), header.at("n").get<int>(),
                         a > 0.0 ? Obstacle::ball(a) : Obstacle::none());
  LoadedField lf{Field::zeros(g), header.at("R1").get<double>(), header.at("R2").get<double>()};
  const int nj = g->dim() >= 2 ? g->n() : 1;
  const int nl = g->dim() >= 3 ? g->n() : 1;
  for (int i = 0; i < g->n(); ++i)
    for (int j = 0; j < nj; ++j)
      for (int l = 0; l < nl; ++l) {
        float pair[2];
        if (!in.read(reinterpret_cast<char *>(pair), sizeof(pair)))
          throw PreconditionError("truncated field file " + path);
        const Index k = g->active_at(i, j, l);
        if (k >= 0) lf.field.values[k] = cplx(pair[0], pair[1]);
      }
  return lf;
}

} // namespace osl
