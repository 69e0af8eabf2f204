// Approximation operators of the regularized system: the discrete
// Helmholtz projection P, the smoothing operator Psi_eps = P (psi_eps * .)
// with zero extension outside the domain, and the velocity cutoff factor
// Phi(eps |v|^2).
#pragma once

#include <cmath>
#include <stdexcept>

#include "nnch/fast_poisson.hpp"
#include "nnch/field.hpp"
#include "nnch/operators.hpp"

namespace nnch {

/// Orthogonal projection of a MAC field onto discretely divergence-free
/// fields (with vanishing wall-normal faces in wall directions). Realized
/// as v - grad(chi), L chi = div v, with the fast diagonal Poisson solver;
/// exact for the discrete operators up to rounding.
class HelmholtzProjector {
 public:
  explicit HelmholtzProjector(const Grid& g) : grid_(g), poisson_(make_cell_solver(g)) {}

  /// Returns the projected field; optionally exposes the scalar chi with
  /// v = P v + grad chi.
  VectorField project(const VectorField& v, ScalarField* chi_out = nullptr) const {
    ScalarField d = divergence(grid_, v);
    ScalarField chi = poisson_.solve(d, 0.0, -1.0);  // solves L chi = d
    VectorField gc = gradient_faces(grid_, chi);
    VectorField w = v;
    axpy(-1.0, gc, w);
    const double res = linf_norm(divergence(grid_, w));
    if (!(res <= 1e-10 * std::max(1.0, linf_norm(d))))
      throw std::runtime_error("helmholtz_project: Poisson residual " + std::to_string(res));
    if (chi_out) *chi_out = std::move(chi);
    return w;
  }

  const Grid& grid() const { return grid_; }

 private:
  Grid grid_;
  DiagSolver2D poisson_;
};

/// One-shot convenience wrapper.
inline VectorField helmholtz_project(const Grid& g, const VectorField& v) {
  return HelmholtzProjector(g).project(v);
}

/// Discrete even mollification kernel: polynomial bump (1 - r^2/eps^2)^4
/// sampled on grid offsets, clipped to its support, normalized to sum 1.
/// Evenness is exact by construction. eps below the grid spacing collapses
/// to the identity kernel.
struct MollifierKernel {
  double eps = 0.0;
  int rx = 0, ry = 0;              // support half-width in cells
  std::vector<double> w;           // (2rx+1) x (2ry+1)

  double weight(int di, int dj) const { return w[std::size_t(dj + ry) * (2 * rx + 1) + (di + rx)]; }

  static MollifierKernel make(const Grid& g, double eps) {
    if (eps < 0.0) throw std::invalid_argument("MollifierKernel: eps must be >= 0");
    MollifierKernel k;
    k.eps = eps;
    k.rx = eps > 0.0 ? int(std::ceil(eps / g.hx())) - 1 : 0;
    k.ry = eps > 0.0 ? int(std::ceil(eps / g.hy())) - 1 : 0;
    k.rx = std::max(k.rx, 0);
    k.ry = std::max(k.ry, 0);
    k.w.assign(std::size_t(2 * k.rx + 1) * (2 * k.ry + 1), 0.0);
    double sum = 0.0;
    for (int dj = -k.ry; dj <= k.ry; ++dj)
      for (int di = -k.rx; di <= k.rx; ++di) {
        const double r2 = di * g.hx() * di * g.hx() + dj * g.hy() * dj * g.hy();
        double val = 0.0;
        if (eps == 0.0) val = (di == 0 && dj == 0) ? 1.0 : 0.0;
        else if (r2 < eps * eps) {
          const double t = 1.0 - r2 / (eps * eps);
          val = t * t * t * t;
        }
        k.w[std::size_t(dj + k.ry) * (2 * k.rx + 1) + (di + k.rx)] = val;
        sum += val;
      }
    for (double& x : k.w) x /= sum;
    return k;
  }
};

namespace detail {

// Convolve one component buffer. Out-of-domain samples wrap in periodic
// directions and read zero otherwise (zero extension).
inline Field2D convolve(const Field2D& f, const MollifierKernel& k, bool px, bool py) {
  Field2D r(f.nx, f.ny, 0.0);
  for (int j = 0; j < f.ny; ++j)
    for (int i = 0; i < f.nx; ++i) {
      double s = 0.0;
      for (int dj = -k.ry; dj <= k.ry; ++dj) {
        int jj = j + dj;
        if (py) jj = wrap(jj, f.ny);
        else if (jj < 0 || jj >= f.ny) continue;
        for (int di = -k.rx; di <= k.rx; ++di) {
          int ii = i + di;
          if (px) ii = wrap(ii, f.nx);
          else if (ii < 0 || ii >= f.nx) continue;
          s += k.weight(di, dj) * f(ii, jj);
        }
      }
      r(i, j) = s;
    }
  return r;
}

}  // namespace detail

/// psi_eps * v with zero extension (periodic wrap in periodic directions).
/// Self-adjoint and an L2 contraction: weights are nonnegative, even and
/// sum to one.
inline VectorField mollify(const Grid& g, const VectorField& v, const MollifierKernel& k) {
  return VectorField{detail::convolve(v.u, k, g.periodic_x(), g.periodic_y()),
                     detail::convolve(v.v, k, g.periodic_x(), g.periodic_y())};
}

inline ScalarField mollify(const Grid& g, const ScalarField& f, const MollifierKernel& k) {
  return detail::convolve(f, k, g.periodic_x(), g.periodic_y());
}

/// Psi_eps = P( psi_eps * . ) restricted to the no-penetration space.
/// On the discrete box the zero-extended convolution is applied first and
/// the projection second.
class SmoothingOperator {
 public:
  SmoothingOperator(const Grid& g, MollifierKernel kernel, const HelmholtzProjector& proj)
      : grid_(g), kernel_(std::move(kernel)), proj_(&proj) {}

  VectorField apply(const VectorField& v) const {
    VectorField w = mollify(grid_, v, kernel_);
    clamp_normal_boundary_faces(grid_, w);
    return proj_->project(w);
  }

  const MollifierKernel& kernel() const { return kernel_; }

 private:
  Grid grid_;
  MollifierKernel kernel_;
  const HelmholtzProjector* proj_;
};

inline VectorField psi_eps(const Grid& g, const VectorField& v, const MollifierKernel& k) {
  HelmholtzProjector proj(g);
  return SmoothingOperator(g, k, proj).apply(v);
}

/// Compactly supported C^2 cutoff profile: identically 1 on [0, R/2],
/// quintic-smoothstep decay to 0 at R. Phi(0) = 1.
struct VelocityCutoff {
  double eps = 0.0;     // cutoff parameter in Phi(eps |s|^2)
  double r_max = 1.0;   // support radius of the profile

  double profile(double t) const {
    if (t <= 0.5 * r_max) return 1.0;
    if (t >= r_max) return 0.0;
    const double x = (t - 0.5 * r_max) / (0.5 * r_max);
    return 1.0 - x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
  }
  /// Phi_eps(s) = Phi(eps |s|^2) evaluated from |s|^2.
  double value_sq(double s2) const { return profile(eps * s2); }
};

/// Pointwise Phi(eps |v|^2) sampled at cell centers.
inline ScalarField velocity_cutoff_factor(const Grid& g, const VectorField& v, const VelocityCutoff& cut) {
  ScalarField uc = make_scalar(g), vc = make_scalar(g);
  velocity_at_centers(g, v, uc, vc);
  ScalarField r = make_scalar(g);
  for (std::size_t k = 0; k < r.a.size(); ++k)
    r.a[k] = cut.value_sq(uc.a[k] * uc.a[k] + vc.a[k] * vc.a[k]);
  return r;
}

}  // namespace nnch
