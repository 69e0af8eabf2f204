// Rectangular MAC-staggered grid and the plain value-type field buffers
// everything else operates on.
#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace nnch {

/// Boundary-condition mode of the whole domain.
///  - box_noslip_neumann: no-slip walls on all four sides, homogeneous
///    Neumann for scalars.
///  - periodic: torus in both directions.
///  - channel_x: periodic in x, walls in y (streamwise-periodic channel).
enum class BcMode { box_noslip_neumann, periodic, channel_x };

inline const char* to_string(BcMode bc) {
  switch (bc) {
    case BcMode::box_noslip_neumann: return "box_noslip_neumann";
    case BcMode::periodic: return "periodic";
    case BcMode::channel_x: return "channel_x";
  }
  return "?";
}

struct Grid {
  int nx = 0, ny = 0;
  double lx = 0.0, ly = 0.0;
  BcMode bc = BcMode::periodic;

  Grid() = default;
  Grid(int nx_, int ny_, double lx_, double ly_, BcMode bc_)
      : nx(nx_), ny(ny_), lx(lx_), ly(ly_), bc(bc_) {
    if (nx < 8 || ny < 8) throw std::invalid_argument("Grid: nx, ny must be >= 8");
    if (!(lx > 0.0) || !(ly > 0.0)) throw std::invalid_argument("Grid: lx, ly must be > 0");
  }

  double hx() const { return lx / nx; }
  double hy() const { return ly / ny; }
  double cell_area() const { return hx() * hy(); }

  bool periodic_x() const { return bc != BcMode::box_noslip_neumann; }
  bool periodic_y() const { return bc == BcMode::periodic; }

  // Number of stored u-faces per row / v-faces per column. In a periodic
  // direction face n coincides with face 0 and is not stored.
  int nxu() const { return periodic_x() ? nx : nx + 1; }
  int nyv() const { return periodic_y() ? ny : ny + 1; }
};

/// Dense row-major 2D buffer; (i,j) with i fastest.
struct Field2D {
  int nx = 0, ny = 0;
  std::vector<double> a;

  Field2D() = default;
  Field2D(int nx_, int ny_, double fill = 0.0) : nx(nx_), ny(ny_), a(std::size_t(nx_) * ny_, fill) {}

  double& operator()(int i, int j) {
    assert(i >= 0 && i < nx && j >= 0 && j < ny);
    return a[std::size_t(j) * nx + i];
  }
  double operator()(int i, int j) const {
    assert(i >= 0 && i < nx && j >= 0 && j < ny);
    return a[std::size_t(j) * nx + i];
  }
  std::size_t size() const { return a.size(); }
  void fill(double v) { a.assign(a.size(), v); }

  bool all_finite() const {
    for (double x : a)
      if (!std::isfinite(x)) return false;
    return true;
  }
};

/// Cell-centered scalar (nx x ny).
using ScalarField = Field2D;

/// MAC velocity: u on x-faces (nxu x ny), v on y-faces (nx x nyv).
struct VectorField {
  Field2D u, v;
};

/// Cell-centered symmetric 2x2 tensor.
struct TensorField {
  Field2D xx, yy, xy;
};

inline ScalarField make_scalar(const Grid& g, double fill = 0.0) { return Field2D(g.nx, g.ny, fill); }
inline VectorField make_vector(const Grid& g, double fill = 0.0) {
  return VectorField{Field2D(g.nxu(), g.ny, fill), Field2D(g.nx, g.nyv(), fill)};
}
inline TensorField make_tensor(const Grid& g, double fill = 0.0) {
  return TensorField{Field2D(g.nx, g.ny, fill), Field2D(g.nx, g.ny, fill), Field2D(g.nx, g.ny, fill)};
}

inline int wrap(int i, int n) {
  int r = i % n;
  return r < 0 ? r + n : r;
}

// Discrete L2 inner products; every stored sample carries weight hx*hy.
// Boundary faces in wall directions hold pinned zeros, so the uniform
// weight is exact for the velocity space the solver works in.
inline double inner(const Grid& g, const Field2D& a, const Field2D& b) {
  assert(a.nx == b.nx && a.ny == b.ny);
  double s = 0.0;
  for (std::size_t k = 0; k < a.a.size(); ++k) s += a.a[k] * b.a[k];
  return s * g.cell_area();
}

inline double inner(const Grid& g, const VectorField& a, const VectorField& b) {
  return inner(g, a.u, b.u) + inner(g, a.v, b.v);
}

inline double l2_norm(const Grid& g, const Field2D& f) { return std::sqrt(inner(g, f, f)); }
inline double l2_norm(const Grid& g, const VectorField& f) { return std::sqrt(inner(g, f, f)); }

inline double linf_norm(const Field2D& f) {
  double m = 0.0;
  for (double x : f.a) m = std::max(m, std::abs(x));
  return m;
}

inline double field_sum(const Field2D& f) {
  double s = 0.0;
  for (double x : f.a) s += x;
  return s;
}

inline double field_mean(const Field2D& f) { return f.a.empty() ? 0.0 : field_sum(f) / double(f.a.size()); }

// axpy-style helpers used all over the steppers
inline void axpy(double alpha, const Field2D& x, Field2D& y) {
  assert(x.size() == y.size());
  for (std::size_t k = 0; k < y.a.size(); ++k) y.a[k] += alpha * x.a[k];
}
inline void axpy(double alpha, const VectorField& x, VectorField& y) {
  axpy(alpha, x.u, y.u);
  axpy(alpha, x.v, y.v);
}
inline void scale(Field2D& f, double alpha) {
  for (double& x : f.a) x *= alpha;
}
inline void scale(VectorField& f, double alpha) {
  scale(f.u, alpha);
  scale(f.v, alpha);
}

/// Thrown when an implicit sub-solve fails to converge and the time step
/// should be retried with a smaller dt.
struct StepRejected : std::runtime_error {
  explicit StepRejected(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace nnch
