// Regularized momentum step: explicit cutoff convection in an exactly
// skew-symmetric discrete form, implicit power-law stress by
// frozen-viscosity Picard (each linear solve is PCG with a fast-diagonal
// constant-coefficient preconditioner), incompressibility by incremental
// pressure projection. Also hosts the capillary force assembly.
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "nnch/cahn_hilliard.hpp"
#include "nnch/constitutive.hpp"
#include "nnch/fast_poisson.hpp"
#include "nnch/field.hpp"
#include "nnch/helmholtz.hpp"
#include "nnch/operators.hpp"

namespace nnch {

struct MomentumStepParams {
  double dt = 1e-3;
  double picard_tol = 1e-8;
  int max_picard = 60;
  double theta_relax = 1.0;  // damping of the viscosity freeze, (0,1]

  void validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("MomentumStepParams: dt must be > 0");
    if (!(picard_tol > 0.0)) throw std::invalid_argument("MomentumStepParams: picard_tol must be > 0");
    if (!(theta_relax > 0.0 && theta_relax <= 1.0))
      throw std::invalid_argument("MomentumStepParams: theta_relax must be in (0,1]");
    if (max_picard < 1) throw std::invalid_argument("MomentumStepParams: max_picard must be >= 1");
  }
};

namespace detail {

inline int node_nx(const Grid& g) { return g.periodic_x() ? g.nx : g.nx + 1; }
inline int node_ny(const Grid& g) { return g.periodic_y() ? g.ny : g.ny + 1; }

inline double node_at(const Grid& g, const Field2D& f, int i, int j) {
  if (g.periodic_x()) i = wrap(i, f.nx);
  if (g.periodic_y()) j = wrap(j, f.ny);
  return f(i, j);
}

/// Strain components of a MAC field: normal parts at centers, shear at
/// nodes. Wall closures via the ghost accessors.
struct Strain {
  Field2D dxx, dyy;  // centers
  Field2D dxy;       // nodes
};

inline Strain strain_of(const Grid& g, const VectorField& w) {
  Strain s{Field2D(g.nx, g.ny), Field2D(g.nx, g.ny), Field2D(node_nx(g), node_ny(g))};
  const double ihx = 1.0 / g.hx(), ihy = 1.0 / g.hy();
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      s.dxx(i, j) = (u_at(g, w.u, i + 1, j) - w.u(i, j)) * ihx;
      s.dyy(i, j) = (v_at(g, w.v, i, j + 1) - w.v(i, j)) * ihy;
    }
  for (int j = 0; j < s.dxy.ny; ++j)
    for (int i = 0; i < s.dxy.nx; ++i)
      s.dxy(i, j) = 0.5 * ((u_at(g, w.u, i, j) - u_at(g, w.u, i, j - 1)) * ihy +
                           (v_at(g, w.v, i, j) - v_at(g, w.v, i - 1, j)) * ihx);
  return s;
}

/// Frozen effective viscosity at centers and nodes.
struct Viscosity {
  Field2D at_centers, at_nodes;
};

inline Viscosity build_viscosity(const Grid& g, const ConstitutiveLaw& law, const ScalarField& c,
                                 const VectorField& w) {
  const Strain s = strain_of(g, w);
  Field2D d2c(g.nx, g.ny);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double dxy_c = 0.25 * (node_at(g, s.dxy, i, j) + node_at(g, s.dxy, i + 1, j) +
                                   node_at(g, s.dxy, i, j + 1) + node_at(g, s.dxy, i + 1, j + 1));
      d2c(i, j) = s.dxx(i, j) * s.dxx(i, j) + s.dyy(i, j) * s.dyy(i, j) + 2.0 * dxy_c * dxy_c;
    }
  Viscosity nu{Field2D(g.nx, g.ny), Field2D(node_nx(g), node_ny(g))};
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) nu.at_centers(i, j) = law.effective_viscosity(c(i, j), d2c(i, j));
  for (int j = 0; j < nu.at_nodes.ny; ++j)
    for (int i = 0; i < nu.at_nodes.nx; ++i) {
      const double cn = 0.25 * (cell_at(g, c, i - 1, j - 1) + cell_at(g, c, i, j - 1) +
                                cell_at(g, c, i - 1, j) + cell_at(g, c, i, j));
      const double dxx_n = 0.25 * (cell_at(g, s.dxx, i - 1, j - 1) + cell_at(g, s.dxx, i, j - 1) +
                                   cell_at(g, s.dxx, i - 1, j) + cell_at(g, s.dxx, i, j));
      const double dyy_n = 0.25 * (cell_at(g, s.dyy, i - 1, j - 1) + cell_at(g, s.dyy, i, j - 1) +
                                   cell_at(g, s.dyy, i - 1, j) + cell_at(g, s.dyy, i, j));
      const double dxy = s.dxy(i, j);
      const double d2 = dxx_n * dxx_n + dyy_n * dyy_n + 2.0 * dxy * dxy;
      nu.at_nodes(i, j) = law.effective_viscosity(std::clamp(cn, law.c_min, law.c_max), d2);
    }
  return nu;
}

/// w -> w/dt - Div(nu D w), derived from the quadratic form
///   Q(w) = sum_c nu_c (dxx^2 + dyy^2) + sum_n 2 nu_n dxy^2  (times area)
/// so it is symmetric positive definite on the unknown faces by
/// construction and <A w, w> reproduces the viscous dissipation exactly.
struct ViscousOperator {
  const Grid* g;
  const Viscosity* nu;
  double inv_dt;

  void apply(const VectorField& w, VectorField& r) const {
    const Grid& gr = *g;
    const double ihx = 1.0 / gr.hx(), ihy = 1.0 / gr.hy();
    const Strain s = strain_of(gr, w);
    Field2D zxx(gr.nx, gr.ny), zyy(gr.nx, gr.ny), zxy(s.dxy.nx, s.dxy.ny);
    for (std::size_t k = 0; k < zxx.a.size(); ++k) {
      zxx.a[k] = nu->at_centers.a[k] * s.dxx.a[k];
      zyy.a[k] = nu->at_centers.a[k] * s.dyy.a[k];
    }
    for (std::size_t k = 0; k < zxy.a.size(); ++k) zxy.a[k] = nu->at_nodes.a[k] * s.dxy.a[k];

    for (int j = 0; j < gr.ny; ++j)
      for (int i = 0; i < r.u.nx; ++i) {
        if (!gr.periodic_x() && (i == 0 || i == gr.nx)) { r.u(i, j) = 0.0; continue; }
        const double zx_e = zxx(wrap(i, gr.nx), j);
        const double zx_w = zxx(wrap(i - 1, gr.nx), j);
        const double zn_n = node_at(gr, zxy, i, j + 1);
        const double zn_s = node_at(gr, zxy, i, j);
        r.u(i, j) = inv_dt * w.u(i, j) - ((zx_e - zx_w) * ihx + (zn_n - zn_s) * ihy);
      }
    for (int j = 0; j < r.v.ny; ++j)
      for (int i = 0; i < gr.nx; ++i) {
        if (!gr.periodic_y() && (j == 0 || j == gr.ny)) { r.v(i, j) = 0.0; continue; }
        const double zy_n = zyy(i, wrap(j, gr.ny));
        const double zy_s = zyy(i, wrap(j - 1, gr.ny));
        const double zn_e = node_at(gr, zxy, i + 1, j);
        const double zn_w = node_at(gr, zxy, i, j);
        r.v(i, j) = inv_dt * w.v(i, j) - ((zn_e - zn_w) * ihx + (zy_n - zy_s) * ihy);
      }
  }

  /// integral S_frozen : D w = <(A - 1/dt) w, w>, by the same quadrature.
  double dissipation(const VectorField& w) const {
    const Grid& gr = *g;
    const Strain s = strain_of(gr, w);
    double q = 0.0;
    for (std::size_t k = 0; k < s.dxx.a.size(); ++k)
      q += nu->at_centers.a[k] * (s.dxx.a[k] * s.dxx.a[k] + s.dyy.a[k] * s.dyy.a[k]);
    for (std::size_t k = 0; k < s.dxy.a.size(); ++k)
      q += 2.0 * nu->at_nodes.a[k] * s.dxy.a[k] * s.dxy.a[k];
    return q * gr.cell_area();
  }
};

/// Divergence-form cutoff convection B(a) w = Div(a (x) w) with centered
/// flux interpolation, and its exact transpose. The skew form
/// N = (B - B^T)/2 pairs to zero against any field by construction.
inline VectorField convection_divform(const Grid& g, const VectorField& a, const VectorField& w) {
  const double ihx = 1.0 / g.hx(), ihy = 1.0 / g.hy();
  const int nnx = node_nx(g), nny = node_ny(g);
  VectorField r = make_vector(g);

  Field2D fxx(g.nx, g.ny), fxy(nnx, nny);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      fxx(i, j) = 0.25 * (a.u(i, j) + u_at(g, a.u, i + 1, j)) * (w.u(i, j) + u_at(g, w.u, i + 1, j));
  for (int j = 0; j < nny; ++j)
    for (int i = 0; i < nnx; ++i)
      fxy(i, j) = 0.25 * (v_at(g, a.v, i - 1, j) + v_at(g, a.v, i, j)) *
                  (u_at(g, w.u, i, j - 1) + u_at(g, w.u, i, j));
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < r.u.nx; ++i) {
      if (!g.periodic_x() && (i == 0 || i == g.nx)) { r.u(i, j) = 0.0; continue; }
      r.u(i, j) = (fxx(wrap(i, g.nx), j) - fxx(wrap(i - 1, g.nx), j)) * ihx +
                  (node_at(g, fxy, i, j + 1) - node_at(g, fxy, i, j)) * ihy;
    }

  Field2D fyy(g.nx, g.ny), fyx(nnx, nny);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      fyy(i, j) = 0.25 * (a.v(i, j) + v_at(g, a.v, i, j + 1)) * (w.v(i, j) + v_at(g, w.v, i, j + 1));
  for (int j = 0; j < nny; ++j)
    for (int i = 0; i < nnx; ++i)
      fyx(i, j) = 0.25 * (u_at(g, a.u, i, j - 1) + u_at(g, a.u, i, j)) *
                  (v_at(g, w.v, i - 1, j) + v_at(g, w.v, i, j));
  for (int j = 0; j < r.v.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      if (!g.periodic_y() && (j == 0 || j == g.ny)) { r.v(i, j) = 0.0; continue; }
      r.v(i, j) = (node_at(g, fyx, i + 1, j) - node_at(g, fyx, i, j)) * ihx +
                  (fyy(i, wrap(j, g.ny)) - fyy(i, wrap(j - 1, g.ny))) * ihy;
    }
  return r;
}

inline VectorField convection_divform_transpose(const Grid& g, const VectorField& a, const VectorField& z) {
  const double ihx = 1.0 / g.hx(), ihy = 1.0 / g.hy();
  const int nnx = node_nx(g), nny = node_ny(g);
  VectorField r = make_vector(g);

  // u-component: p_c = axc * D^T z at centers, q_n = ayn * D^T z at nodes
  Field2D pc(g.nx, g.ny), qn(nnx, nny);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      pc(i, j) = 0.5 * (a.u(i, j) + u_at(g, a.u, i + 1, j)) *
                 (z.u(i, j) - u_at(g, z.u, i + 1, j)) * ihx;
  for (int j = 0; j < nny; ++j)
    for (int i = 0; i < nnx; ++i)
      qn(i, j) = 0.5 * (v_at(g, a.v, i - 1, j) + v_at(g, a.v, i, j)) *
                 (u_at(g, z.u, i, j - 1) - u_at(g, z.u, i, j)) * ihy;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < r.u.nx; ++i) {
      if (!g.periodic_x() && (i == 0 || i == g.nx)) { r.u(i, j) = 0.0; continue; }
      r.u(i, j) = 0.5 * (pc(wrap(i - 1, g.nx), j) + pc(wrap(i, g.nx), j)) +
                  0.5 * (node_at(g, qn, i, j) + node_at(g, qn, i, j + 1));
    }

  Field2D py(g.nx, g.ny), qx(nnx, nny);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      py(i, j) = 0.5 * (a.v(i, j) + v_at(g, a.v, i, j + 1)) *
                 (z.v(i, j) - v_at(g, z.v, i, j + 1)) * ihy;
  for (int j = 0; j < nny; ++j)
    for (int i = 0; i < nnx; ++i)
      qx(i, j) = 0.5 * (u_at(g, a.u, i, j - 1) + u_at(g, a.u, i, j)) *
                 (v_at(g, z.v, i - 1, j) - v_at(g, z.v, i, j)) * ihx;
  for (int j = 0; j < r.v.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      if (!g.periodic_y() && (j == 0 || j == g.ny)) { r.v(i, j) = 0.0; continue; }
      r.v(i, j) = 0.5 * (py(i, wrap(j - 1, g.ny)) + py(i, wrap(j, g.ny))) +
                  0.5 * (node_at(g, qx, i, j) + node_at(g, qx, i + 1, j));
    }
  return r;
}

}  // namespace detail

/// Cutoff-weighted advecting field a = Phi(eps |v|^2) v, factor sampled at
/// cell centers and averaged to faces.
inline VectorField cutoff_advecting_field(const Grid& g, const VectorField& v, const VelocityCutoff& cut) {
  ScalarField f = velocity_cutoff_factor(g, v, cut);
  VectorField a = make_vector(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < a.u.nx; ++i)
      a.u(i, j) = v.u(i, j) * 0.5 * (cell_at(g, f, i - 1, j) + cell_at(g, f, i, j));
  for (int j = 0; j < a.v.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      a.v(i, j) = v.v(i, j) * 0.5 * (cell_at(g, f, i, j - 1) + cell_at(g, f, i, j));
  return a;
}

/// Skew-symmetric discrete convection: <N(a) w, w> = 0 exactly, consistent
/// with Div(a (x) w) - (Div a) w / 2.
inline VectorField skew_convection(const Grid& g, const VectorField& a, const VectorField& w) {
  VectorField b = detail::convection_divform(g, a, w);
  VectorField bt = detail::convection_divform_transpose(g, a, w);
  VectorField r = make_vector(g);
  for (std::size_t k = 0; k < r.u.a.size(); ++k) r.u.a[k] = 0.5 * (b.u.a[k] - bt.u.a[k]);
  for (std::size_t k = 0; k < r.v.a.size(); ++k) r.v.a[k] = 0.5 * (b.v.a[k] - bt.v.a[k]);
  return r;
}

/// Spec form of the capillary force: -Psi_eps(Div(grad c (x) grad c)),
/// tensor assembled at centers (normal parts) and nodes (shear part).
inline VectorField capillary_force(const Grid& g, const ScalarField& c, const MollifierKernel& kernel,
                                   const HelmholtzProjector& proj) {
  const double ihx = 1.0 / g.hx(), ihy = 1.0 / g.hy();
  const int nnx = detail::node_nx(g), nny = detail::node_ny(g);
  ScalarField gx = make_scalar(g), gy = make_scalar(g);
  gradient_centers(g, c, gx, gy);
  Field2D txx(g.nx, g.ny), tyy(g.nx, g.ny), txy(nnx, nny);
  for (std::size_t k = 0; k < txx.a.size(); ++k) {
    txx.a[k] = gx.a[k] * gx.a[k];
    tyy.a[k] = gy.a[k] * gy.a[k];
  }
  for (int j = 0; j < nny; ++j)
    for (int i = 0; i < nnx; ++i) {
      const double gxn = 0.5 * ((cell_at(g, c, i, j - 1) - cell_at(g, c, i - 1, j - 1)) +
                                (cell_at(g, c, i, j) - cell_at(g, c, i - 1, j))) * ihx;
      const double gyn = 0.5 * ((cell_at(g, c, i - 1, j) - cell_at(g, c, i - 1, j - 1)) +
                                (cell_at(g, c, i, j) - cell_at(g, c, i, j - 1))) * ihy;
      txy(i, j) = gxn * gyn;
    }
  VectorField div = make_vector(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < div.u.nx; ++i) {
      if (!g.periodic_x() && (i == 0 || i == g.nx)) continue;
      div.u(i, j) = (txx(wrap(i, g.nx), j) - txx(wrap(i - 1, g.nx), j)) * ihx +
                    (detail::node_at(g, txy, i, j + 1) - detail::node_at(g, txy, i, j)) * ihy;
    }
  for (int j = 0; j < div.v.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      if (!g.periodic_y() && (j == 0 || j == g.ny)) continue;
      div.v(i, j) = (detail::node_at(g, txy, i + 1, j) - detail::node_at(g, txy, i, j)) * ihx +
                    (tyy(i, wrap(j, g.ny)) - tyy(i, wrap(j - 1, g.ny))) * ihy;
    }
  VectorField m = mollify(g, div, kernel);
  clamp_normal_boundary_faces(g, m);
  VectorField f = proj.project(m);
  scale(f, -1.0);
  return f;
}

/// Energy-consistent capillary force -Psi_eps(cbar grad mu): with the
/// MAC product rule cbar*Gmu + mubar*Gc = G(mu c) this equals the
/// projected mu grad c form, and its work pairs exactly (up to the time
/// lag) against the CH transport term built from the same cbar.
inline VectorField capillary_force_mu(const Grid& g, const ScalarField& c, const ScalarField& mu,
                                      const MollifierKernel& kernel, const HelmholtzProjector& proj) {
  VectorField gmu = gradient_faces(g, mu);
  VectorField f = make_vector(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < f.u.nx; ++i)
      f.u(i, j) = -gmu.u(i, j) * 0.5 * (cell_at(g, c, i - 1, j) + cell_at(g, c, i, j));
  for (int j = 0; j < f.v.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      f.v(i, j) = -gmu.v(i, j) * 0.5 * (cell_at(g, c, i, j - 1) + cell_at(g, c, i, j));
  VectorField m = mollify(g, f, kernel);
  clamp_normal_boundary_faces(g, m);
  return proj.project(m);
}

struct MomentumStepResult {
  VectorField v;
  ScalarField p;
  int picard_iters = 0;
  int cg_iters = 0;
  double residual = 0.0;
  double visc_dissipation = 0.0;  // integral S_frozen : D v1 (ledger entry)
  double conv_power = 0.0;        // <N(a) v0, v1>, reported
  std::vector<double> picard_residuals;
};

class MomentumStepper {
 public:
  MomentumStepper(const Grid& g, ConstitutiveLaw law, MomentumStepParams params, VelocityCutoff cutoff,
                  const HelmholtzProjector& proj)
      : grid_(g), law_(law), params_(params), cutoff_(cutoff), proj_(&proj),
        pre_u_(make_u_solver(g)), pre_v_(make_v_solver(g)) {
    law_.validate();
    params_.validate();
    if (law_.q < 2.0 && law_.delta == 0.0 && law_.kind == StressKind::power_law)
      throw std::invalid_argument("MomentumStepper: q < 2 power law needs delta > 0");
  }

  const MomentumStepParams& params() const { return params_; }

  /// One implicit step. f_ext is the total external force at faces
  /// (capillary + body). advect (when non-null) supplies the velocity the
  /// cutoff convection is built from; default is v0.
  MomentumStepResult step(const VectorField& v0, const ScalarField& p0, const ScalarField& c,
                          const VectorField& f_ext, double dt, const VectorField* advect = nullptr) const {
    const VectorField a = cutoff_advecting_field(grid_, advect ? *advect : v0, cutoff_);
    const VectorField conv = skew_convection(grid_, a, v0);

    VectorField base = make_vector(grid_);
    for (std::size_t k = 0; k < base.u.a.size(); ++k)
      base.u.a[k] = v0.u.a[k] / dt - conv.u.a[k] + f_ext.u.a[k];
    for (std::size_t k = 0; k < base.v.a.size(); ++k)
      base.v.a[k] = v0.v.a[k] / dt - conv.v.a[k] + f_ext.v.a[k];
    clamp_normal_boundary_faces(grid_, base);

    MomentumStepResult out;
    out.p = p0;
    VectorField v_nu = v0;       // viscosity linearization state
    VectorField v_prev = v0;
    VectorField vt = v0;         // warm start for the inner solves
    const double denom0 = l2_norm(grid_, v0);
    std::vector<double> hist;
    detail::Viscosity nu;

    int k = 0;
    for (; k < params_.max_picard; ++k) {
      nu = detail::build_viscosity(grid_, law_, c, v_nu);
      detail::ViscousOperator op{&grid_, &nu, 1.0 / dt};
      double nu_hat = geomean(nu.at_centers);

      VectorField rhs = base;
      VectorField gp = gradient_faces(grid_, out.p);
      axpy(-1.0, gp, rhs);
      clamp_normal_boundary_faces(grid_, rhs);

      out.cg_iters += pcg(op, nu_hat, dt, rhs, vt);
      ScalarField chi;
      VectorField v_new = proj_->project(vt, &chi);
      axpy(1.0 / dt, chi, out.p);

      double diff = 0.0;
      for (std::size_t i = 0; i < v_new.u.a.size(); ++i) {
        const double d = v_new.u.a[i] - v_prev.u.a[i];
        diff += d * d;
      }
      for (std::size_t i = 0; i < v_new.v.a.size(); ++i) {
        const double d = v_new.v.a[i] - v_prev.v.a[i];
        diff += d * d;
      }
      diff = std::sqrt(diff * grid_.cell_area());
      const double res = diff / std::max({denom0, l2_norm(grid_, v_new), 1e-300});
      hist.push_back(res);
      v_prev = v_new;

      if (res <= params_.picard_tol) { ++k; break; }
      // stall detector: the frozen-viscosity iteration has an intrinsic
      // linear tail (rate ~0.7 at q=1.5), so only a near-flat window
      // counts as stagnation
      if (hist.size() > 10 && res > 0.5 * hist[hist.size() - 11])
        throw StepRejected("momentum_step: Picard stagnation (residual " + std::to_string(res) +
                           "); reduce dt");
      // relax the viscosity state
      for (std::size_t i = 0; i < v_nu.u.a.size(); ++i)
        v_nu.u.a[i] += params_.theta_relax * (v_new.u.a[i] - v_nu.u.a[i]);
      for (std::size_t i = 0; i < v_nu.v.a.size(); ++i)
        v_nu.v.a[i] += params_.theta_relax * (v_new.v.a[i] - v_nu.v.a[i]);
    }
    if (hist.empty() || hist.back() > params_.picard_tol)
      throw StepRejected("momentum_step: Picard did not converge in " + std::to_string(params_.max_picard) +
                         " iterations; reduce dt");

    out.v = v_prev;
    out.picard_iters = k;
    out.residual = hist.back();
    out.picard_residuals = hist;
    detail::ViscousOperator op{&grid_, &nu, 1.0 / dt};
    out.visc_dissipation = op.dissipation(out.v);
    out.conv_power = inner(grid_, conv, out.v);
    return out;
  }

 private:
  static double geomean(const Field2D& f) {
    double s = 0.0;
    for (double x : f.a) s += std::log(std::max(x, 1e-300));
    return std::exp(s / double(f.a.size()));
  }

  static DiagSolver2D make_u_solver(const Grid& g) {
    const int n = g.periodic_x() ? g.nx : g.nx - 1;
    return DiagSolver2D(n, g.ny, g.periodic_x() ? Axis1D::periodic : Axis1D::dirichlet_node,
                        g.periodic_y() ? Axis1D::periodic : Axis1D::dirichlet_stag, g.hx(), g.hy());
  }
  static DiagSolver2D make_v_solver(const Grid& g) {
    const int n = g.periodic_y() ? g.ny : g.ny - 1;
    return DiagSolver2D(g.nx, n, g.periodic_x() ? Axis1D::periodic : Axis1D::dirichlet_stag,
                        g.periodic_y() ? Axis1D::periodic : Axis1D::dirichlet_node, g.hx(), g.hy());
  }

  /// Constant-coefficient preconditioner (1/dt + nu_hat/2 (-Lap))^{-1}
  /// per component, with interior stripping in wall-normal directions.
  void precondition(double nu_hat, double dt, const VectorField& r, VectorField& z) const {
    if (grid_.periodic_x()) {
      z.u = pre_u_.solve(r.u, 1.0 / dt, 0.5 * nu_hat);
    } else {
      Field2D t(grid_.nx - 1, grid_.ny);
      for (int j = 0; j < grid_.ny; ++j)
        for (int i = 0; i < grid_.nx - 1; ++i) t(i, j) = r.u(i + 1, j);
      t = pre_u_.solve(t, 1.0 / dt, 0.5 * nu_hat);
      z.u.fill(0.0);
      for (int j = 0; j < grid_.ny; ++j)
        for (int i = 0; i < grid_.nx - 1; ++i) z.u(i + 1, j) = t(i, j);
    }
    if (grid_.periodic_y()) {
      z.v = pre_v_.solve(r.v, 1.0 / dt, 0.5 * nu_hat);
    } else {
      Field2D t(grid_.nx, grid_.ny - 1);
      for (int j = 0; j < grid_.ny - 1; ++j)
        for (int i = 0; i < grid_.nx; ++i) t(i, j) = r.v(i, j + 1);
      t = pre_v_.solve(t, 1.0 / dt, 0.5 * nu_hat);
      z.v.fill(0.0);
      for (int j = 0; j < grid_.ny - 1; ++j)
        for (int i = 0; i < grid_.nx; ++i) z.v(i, j + 1) = t(i, j);
    }
  }

  int pcg(const detail::ViscousOperator& op, double nu_hat, double dt, const VectorField& b,
          VectorField& x) const {
    const double bnorm = l2_norm(grid_, b);
    if (bnorm == 0.0) { scale(x, 0.0); return 0; }
    const double tol = 1e-11 * bnorm;
    VectorField r = make_vector(grid_), z = make_vector(grid_), p = make_vector(grid_), ap = make_vector(grid_);
    op.apply(x, ap);
    r = b;
    nnch::axpy(-1.0, ap, r);
    clamp_normal_boundary_faces(grid_, r);
    precondition(nu_hat, dt, r, z);
    clamp_normal_boundary_faces(grid_, z);
    p = z;
    double rz = inner(grid_, r, z);
    int it = 0;
    for (; it < 800; ++it) {
      if (l2_norm(grid_, r) <= tol) break;
      op.apply(p, ap);
      const double alpha = rz / inner(grid_, p, ap);
      nnch::axpy(alpha, p, x);
      nnch::axpy(-alpha, ap, r);
      precondition(nu_hat, dt, r, z);
      clamp_normal_boundary_faces(grid_, z);
      const double rz_new = inner(grid_, r, z);
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t i = 0; i < p.u.a.size(); ++i) p.u.a[i] = z.u.a[i] + beta * p.u.a[i];
      for (std::size_t i = 0; i < p.v.a.size(); ++i) p.v.a[i] = z.v.a[i] + beta * p.v.a[i];
    }
    if (l2_norm(grid_, r) > tol)
      throw StepRejected("momentum_step: inner viscous solve did not converge");
    return it;
  }

  Grid grid_;
  ConstitutiveLaw law_;
  MomentumStepParams params_;
  VelocityCutoff cutoff_;
  const HelmholtzProjector* proj_;
  DiagSolver2D pre_u_, pre_v_;
};

}  // namespace nnch
