// osl: obstacle soliton laboratory
// Copyright (c) 2026 the osl developers

#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <array>
#include <complex>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace osl {

using cplx = std::complex<double>;
using RVec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using SpMat = Eigen::SparseMatrix<double>;
using Index = Eigen::Index;
using Vec3 = std::array<double, 3>;

/// Centered ball (interval in 1D) removed from the box.
struct Obstacle {
  enum class Kind { none, ball };
  Kind kind = Kind::none;
  double a = 0.0;

  static Obstacle none() { return {}; }
  static Obstacle ball(double radius) { return {Kind::ball, radius}; }
  bool present() const { return kind == Kind::ball; }
};

/// Uniform lattice on [-L, L]^d with n interior nodes per axis and the nodes
/// inside the obstacle removed.  Only active nodes carry unknowns; every
/// other lattice site (box boundary, obstacle) is an implicit zero.
class Grid {
public:
  Grid(int dim, double L, int n, Obstacle obstacle);

  int dim() const { return dim_; }
  double L() const { return L_; }
  int n() const { return n_; }
  double h() const { return h_; }
  const Obstacle &obstacle() const { return obstacle_; }

  /// Number of active nodes.
  Index size() const { return static_cast<Index>(lattice_.size()); }
  double cell_volume() const { return cell_; }

  /// Coordinate of lattice index i along any axis.
  double node(int i) const { return -L_ + (i + 1) * h_; }
  double coord(Index k, int axis) const { return node(lattice_[k][axis]); }
  Vec3 position(Index k) const;
  double radius(Index k) const;
  const std::array<int, 3> &lattice(Index k) const { return lattice_[k]; }

  /// Active index of lattice site (i, j, l), or -1 when masked or outside.
  Index active_at(int i, int j = 0, int l = 0) const;
  bool active(int i, int j = 0, int l = 0) const { return active_at(i, j, l) >= 0; }

  /// Active index of the node `step` cells away along `axis`, or -1.
  Index neighbor(Index k, int axis, int step) const;

  /// Second-order Dirichlet Laplacian, assembled once per grid.
  const SpMat &laplacian() const { return lap_; }

private:
  int dim_;
  double L_;
  int n_;
  double h_;
  double cell_;
  Obstacle obstacle_;
  std::vector<std::array<int, 3>> lattice_;
  std::vector<Index> active_of_site_;
  SpMat lap_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Complex lattice function on the active nodes of a grid.
struct Field {
  GridPtr grid;
  CVec values;

  static Field zeros(GridPtr g) { return {g, CVec::Zero(g->size())}; }
};

/// Rejects n < 16, L <= 4a and grids with fewer than 8 active nodes per axis
/// outside the obstacle.
GridPtr build_grid(int dim, double L, int n, Obstacle obstacle = Obstacle::none());

/// Dirichlet Laplacian of the given stencil order (2 or 8).  Order 8 uses the
/// wide centered stencil with the same zero extension; it only feeds
/// high-accuracy functionals.
SpMat laplacian_matrix(const Grid &g, int order = 2);

/// First-derivative matrices, one per axis.  Order 2 is centered in the bulk
/// and one-sided where a neighbor is masked; order 8 is the wide centered
/// stencil with zero extension.
std::vector<SpMat> gradient_matrices(const Grid &g, int order = 2);

Field laplacian_dirichlet(const Field &u);
std::vector<Field> gradient(const Field &u);

/// Re sum u conj(w) h^d.  Throws on grid mismatch.
double real_inner(const Field &u, const Field &w);
double real_inner(const Grid &g, const CVec &u, const CVec &w);
double real_inner(const Grid &g, const RVec &u, const RVec &w);

enum class NormKind { L2, H1, H2 };

/// Discrete norms.  The gradient part of H1 is the Dirichlet form
/// (-Lap u, u), i.e. the sum of squared edge differences, so that the
/// interpolation inequality holds exactly for the discrete operators.
double norm(const Grid &g, const CVec &u, NormKind kind);
double norm(const Grid &g, const RVec &u, NormKind kind);
double norm(const Field &u, NormKind kind);

/// Radial C^2 ramp from 0 (|x| <= R1) to 1 (|x| >= R2).
struct CutoffPsi {
  double R1 = 0.0;
  double R2 = 0.0;
  RVec psi;
  std::vector<RVec> grad_psi;
  RVec lap_psi;
};

/// Quintic smoothstep s(t) = 6t^5 - 15t^4 + 10t^3 of t = (|x|-R1)/(R2-R1),
/// with gradient and Laplacian evaluated analytically.
CutoffPsi build_cutoff(const Grid &g, double R1, double R2);

/// Scalar ramp and its first two radial derivatives.
struct RampValue {
  double s, ds, d2s;
};
RampValue cutoff_profile(double r, double R1, double R2);

/// Pointwise Psi, or 1 everywhere when no cutoff is supplied.
RVec psi_or_one(const Grid &g, const CutoffPsi *psi);

/// JSON header line {dim, L, n, obstacle_a, R1, R2} followed by the lattice as
/// little-endian complex64 pairs in row-major order with zeros on masked sites.
void save_field(const std::string &path, const Field &u, double R1 = 0.0, double R2 = 0.0);

struct LoadedField {
  Field field;
  double R1 = 0.0;
  double R2 = 0.0;
};
LoadedField load_field(const std::string &path);

} // namespace osl
