// Direct solver for constant-coefficient operators
//   (alpha + beta1 (-L) + beta2 L^2) x = b
// where L is the 5-point Laplacian closed with the grid's boundary rule.
// The operator is diagonalized by separable real transforms: DFT
// (halfcomplex) in periodic directions, DCT-II for Neumann cell scalars,
// DST-II / DST-I for the velocity-component closures. Plans use
// FFTW_ESTIMATE only so repeated runs are bit-identical.
#pragma once

#include <fftw3.h>

#include <memory>
#include <stdexcept>
#include <vector>

#include "nnch/field.hpp"

namespace nnch {

/// 1D closure of the second-difference operator along one axis.
enum class Axis1D {
  periodic,          // wrap; R2HC/HC2R
  neumann_stag,      // cell scalars: ghost = mirror; REDFT10/01
  dirichlet_stag,    // tangential velocity: ghost = -interior; RODFT10/01
  dirichlet_node,    // wall-normal velocity interior faces; RODFT00
};

namespace detail {

struct TransformSpec {
  fftw_r2r_kind fwd, bwd;
  double norm;                 // product of 1D normalizations
  std::vector<double> lambda;  // eigenvalues of (-d^2/dx^2), per output slot

  static TransformSpec make(Axis1D kind, int n, double h) {
    TransformSpec t;
    t.lambda.resize(n);
    const double s = 4.0 / (h * h);
    auto sin2 = [](double x) { return std::sin(x) * std::sin(x); };
    switch (kind) {
      case Axis1D::periodic:
        t.fwd = FFTW_R2HC; t.bwd = FFTW_HC2R; t.norm = n;
        // halfcomplex slot k holds the frequency min(k, n-k)
        for (int k = 0; k < n; ++k) t.lambda[k] = s * sin2(M_PI * std::min(k, n - k) / double(n));
        break;
      case Axis1D::neumann_stag:
        t.fwd = FFTW_REDFT10; t.bwd = FFTW_REDFT01; t.norm = 2.0 * n;
        for (int k = 0; k < n; ++k) t.lambda[k] = s * sin2(M_PI * k / (2.0 * n));
        break;
      case Axis1D::dirichlet_stag:
        t.fwd = FFTW_RODFT10; t.bwd = FFTW_RODFT01; t.norm = 2.0 * n;
        for (int k = 0; k < n; ++k) t.lambda[k] = s * sin2(M_PI * (k + 1) / (2.0 * n));
        break;
      case Axis1D::dirichlet_node:
        t.fwd = FFTW_RODFT00; t.bwd = FFTW_RODFT00; t.norm = 2.0 * (n + 1);
        for (int k = 0; k < n; ++k) t.lambda[k] = s * sin2(M_PI * (k + 1) / (2.0 * (n + 1)));
        break;
    }
    return t;
  }
};

}  // namespace detail

/// Reusable diagonal solver on an nx-by-ny array (row-major, i fastest).
class DiagSolver2D {
 public:
  DiagSolver2D(int nx, int ny, Axis1D kx, Axis1D ky, double hx, double hy)
      : nx_(nx), ny_(ny),
        tx_(detail::TransformSpec::make(kx, nx, hx)),
        ty_(detail::TransformSpec::make(ky, ny, hy)),
        buf_(fftw_alloc_real(std::size_t(nx) * ny), &fftw_free) {
    if (!buf_) throw std::bad_alloc();
    fwd_ = fftw_plan_r2r_2d(ny_, nx_, buf_.get(), buf_.get(), ty_.fwd, tx_.fwd, FFTW_ESTIMATE);
    bwd_ = fftw_plan_r2r_2d(ny_, nx_, buf_.get(), buf_.get(), ty_.bwd, tx_.bwd, FFTW_ESTIMATE);
    if (!fwd_ || !bwd_) throw std::runtime_error("DiagSolver2D: FFTW plan creation failed");
  }
  ~DiagSolver2D() {
    if (fwd_) fftw_destroy_plan(fwd_);
    if (bwd_) fftw_destroy_plan(bwd_);
  }
  DiagSolver2D(const DiagSolver2D&) = delete;
  DiagSolver2D& operator=(const DiagSolver2D&) = delete;

  /// Solve (alpha + beta1*(-L) + beta2*L^2) x = b. When the zero mode is
  /// singular (alpha = 0, constant nullspace) it is gauged to zero mean.
  Field2D solve(const Field2D& b, double alpha, double beta1, double beta2 = 0.0) const {
    if (b.nx != nx_ || b.ny != ny_) throw std::invalid_argument("DiagSolver2D: shape mismatch");
    double* w = buf_.get();
    std::copy(b.a.begin(), b.a.end(), w);
    fftw_execute(fwd_);
    const double norm = tx_.norm * ty_.norm;
    for (int j = 0; j < ny_; ++j) {
      const double ly = ty_.lambda[j];
      for (int i = 0; i < nx_; ++i) {
        const double lam = tx_.lambda[i] + ly;
        const double den = alpha + beta1 * lam + beta2 * lam * lam;
        double& c = w[std::size_t(j) * nx_ + i];
        c = den == 0.0 ? 0.0 : c / (den * norm);
      }
    }
    fftw_execute(bwd_);
    Field2D x(nx_, ny_);
    std::copy(w, w + x.size(), x.a.begin());
    return x;
  }

 private:
  int nx_, ny_;
  detail::TransformSpec tx_, ty_;
  std::unique_ptr<double, decltype(&fftw_free)> buf_;
  fftw_plan fwd_ = nullptr, bwd_ = nullptr;
};

/// Solver for cell-centered scalars under the grid's boundary mode.
inline DiagSolver2D make_cell_solver(const Grid& g) {
  return DiagSolver2D(g.nx, g.ny, g.periodic_x() ? Axis1D::periodic : Axis1D::neumann_stag,
                      g.periodic_y() ? Axis1D::periodic : Axis1D::neumann_stag, g.hx(), g.hy());
}

}  // namespace nnch
