// Second-order staggered difference operators with the boundary closures:
// Neumann ghost reflection for cell scalars, antireflection for tangential
// velocity ghosts, pinned zeros on wall-normal faces, periodic wrap
// otherwise.
#pragma once

#include "nnch/field.hpp"

namespace nnch {

// --- ghosted accessors -----------------------------------------------------

/// Cell scalar with mirror reflection at walls (zero normal derivative).
inline double cell_at(const Grid& g, const Field2D& f, int i, int j) {
  if (g.periodic_x()) i = wrap(i, g.nx);
  else i = i < 0 ? -i - 1 : (i >= g.nx ? 2 * g.nx - 1 - i : i);
  if (g.periodic_y()) j = wrap(j, g.ny);
  else j = j < 0 ? -j - 1 : (j >= g.ny ? 2 * g.ny - 1 - j : j);
  return f(i, j);
}

/// u-component sample; tangential ghost rows antireflect so that the
/// interpolated wall value is exactly zero.
inline double u_at(const Grid& g, const Field2D& u, int i, int j) {
  if (g.periodic_x()) i = wrap(i, g.nx);
  double s = 1.0;
  if (g.periodic_y()) {
    j = wrap(j, g.ny);
  } else {
    if (j < 0) { j = -j - 1; s = -1.0; }
    else if (j >= g.ny) { j = 2 * g.ny - 1 - j; s = -1.0; }
  }
  return s * u(i, j);
}

/// v-component sample, mirrored roles of x and y.
inline double v_at(const Grid& g, const Field2D& v, int i, int j) {
  if (g.periodic_y()) j = wrap(j, g.nyv());
  double s = 1.0;
  if (g.periodic_x()) {
    i = wrap(i, g.nx);
  } else {
    if (i < 0) { i = -i - 1; s = -1.0; }
    else if (i >= g.nx) { i = 2 * g.nx - 1 - i; s = -1.0; }
  }
  return s * v(i, j);
}

// --- first-order building blocks -------------------------------------------

/// Face gradient of a cell scalar. Wall faces get zero (homogeneous
/// Neumann); this is the exact negative adjoint of `divergence`.
inline VectorField gradient_faces(const Grid& g, const ScalarField& f) {
  VectorField r = make_vector(g);
  const double ihx = 1.0 / g.hx(), ihy = 1.0 / g.hy();
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < r.u.nx; ++i) {
      if (!g.periodic_x() && (i == 0 || i == g.nx)) { r.u(i, j) = 0.0; continue; }
      r.u(i, j) = (f(wrap(i, g.nx), j) - f(wrap(i - 1, g.nx), j)) * ihx;
    }
  for (int j = 0; j < r.v.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      if (!g.periodic_y() && (j == 0 || j == g.ny)) { r.v(i, j) = 0.0; continue; }
      r.v(i, j) = (f(i, wrap(j, g.ny)) - f(i, wrap(j - 1, g.ny))) * ihy;
    }
  return r;
}

/// MAC divergence of a face field, at cell centers.
inline ScalarField divergence(const Grid& g, const VectorField& w) {
  ScalarField r = make_scalar(g);
  const double ihx = 1.0 / g.hx(), ihy = 1.0 / g.hy();
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double ue = g.periodic_x() ? w.u(wrap(i + 1, g.nx), j) : w.u(i + 1, j);
      const double uw = w.u(i, j);
      const double vn = g.periodic_y() ? w.v(i, wrap(j + 1, g.ny)) : w.v(i, j + 1);
      const double vs = w.v(i, j);
      r(i, j) = (ue - uw) * ihx + (vn - vs) * ihy;
    }
  return r;
}

/// 5-point Laplacian with Neumann ghost reflection (periodic wrap in
/// periodic directions). Built literally as Div(grad) so the discrete
/// integration-by-parts identity is structural.
inline ScalarField laplacian_neumann(const Grid& g, const ScalarField& f) {
  return divergence(g, gradient_faces(g, f));
}

// --- derived quantities -----------------------------------------------------

/// Symmetric velocity gradient at cell centers.
inline TensorField sym_gradient(const Grid& g, const VectorField& w) {
  TensorField t = make_tensor(g);
  const double ihx = 1.0 / g.hx(), ihy = 1.0 / g.hy();
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double ue = u_at(g, w.u, i + 1, j), uw = w.u(i, j);
      const double vn = v_at(g, w.v, i, j + 1), vs = w.v(i, j);
      t.xx(i, j) = (ue - uw) * ihx;
      t.yy(i, j) = (vn - vs) * ihy;
      const double dudy = (u_at(g, w.u, i, j + 1) + u_at(g, w.u, i + 1, j + 1) -
                           u_at(g, w.u, i, j - 1) - u_at(g, w.u, i + 1, j - 1)) *
                          0.25 * ihy;
      const double dvdx = (v_at(g, w.v, i + 1, j) + v_at(g, w.v, i + 1, j + 1) -
                           v_at(g, w.v, i - 1, j) - v_at(g, w.v, i - 1, j + 1)) *
                          0.25 * ihx;
      t.xy(i, j) = 0.5 * (dudy + dvdx);
    }
  return t;
}

/// Centered gradient of a cell scalar, at cell centers.
inline void gradient_centers(const Grid& g, const ScalarField& f, ScalarField& gx, ScalarField& gy) {
  const double ihx = 0.5 / g.hx(), ihy = 0.5 / g.hy();
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      gx(i, j) = (cell_at(g, f, i + 1, j) - cell_at(g, f, i - 1, j)) * ihx;
      gy(i, j) = (cell_at(g, f, i, j + 1) - cell_at(g, f, i, j - 1)) * ihy;
    }
}

/// Velocity components interpolated to cell centers.
inline void velocity_at_centers(const Grid& g, const VectorField& w, ScalarField& uc, ScalarField& vc) {
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      uc(i, j) = 0.5 * (w.u(i, j) + u_at(g, w.u, i + 1, j));
      vc(i, j) = 0.5 * (w.v(i, j) + v_at(g, w.v, i, j + 1));
    }
}

/// Zero out wall-normal boundary faces (restriction to the no-penetration
/// velocity space). No-op in periodic directions.
inline void clamp_normal_boundary_faces(const Grid& g, VectorField& w) {
  if (!g.periodic_x())
    for (int j = 0; j < g.ny; ++j) w.u(0, j) = w.u(g.nx, j) = 0.0;
  if (!g.periodic_y())
    for (int i = 0; i < g.nx; ++i) w.v(i, 0) = w.v(i, g.ny) = 0.0;
}

/// 1/2 * integral of |v|^2, summed over stored faces.
inline double kinetic_energy(const Grid& g, const VectorField& w) {
  return 0.5 * inner(g, w, w);
}

}  // namespace nnch
