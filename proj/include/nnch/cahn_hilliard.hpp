// Convective Cahn-Hilliard time step: conservative centered transport by
// the mollified velocity, convex-splitting update
//   mu1 = phi(c1)/w + S (c1 - c0) - w Lap c1,   S >= alpha/w,
// solved by Picard with a fast-diagonal solve of the constant-coefficient
// implicit part. Mass is conserved to rounding (the update is computed as
// an increment whose right-hand side is in discrete divergence form).
#pragma once

#include <cmath>
#include <string>

#include "nnch/constitutive.hpp"
#include "nnch/fast_poisson.hpp"
#include "nnch/field.hpp"
#include "nnch/helmholtz.hpp"
#include "nnch/operators.hpp"

namespace nnch {

struct CHStepParams {
  double m = 1.0;                // mobility
  double dt = 1e-3;
  double splitting_const = 1.0;  // >= alpha / interface_width
  double tol = 1e-10;            // Picard relative residual
  int max_picard = 200;
  double interface_width = 1.0;  // mu = phi/w - w Lap c; analysis regime is 1

  void validate(const FreeEnergy& e) const {
    if (!(m > 0.0)) throw std::invalid_argument("CHStepParams: m must be > 0");
    if (!(dt > 0.0)) throw std::invalid_argument("CHStepParams: dt must be > 0");
    if (!(interface_width > 0.0)) throw std::invalid_argument("CHStepParams: interface_width must be > 0");
    if (splitting_const < e.alpha() / interface_width - 1e-14)
      throw std::invalid_argument("CHStepParams: splitting_const must be >= alpha/width = " +
                                  std::to_string(e.alpha() / interface_width));
    if (!(tol > 0.0) || max_picard < 1) throw std::invalid_argument("CHStepParams: bad tolerance settings");
  }
};

/// mu = phi(c)/w - w Lap c (state chemical potential, no splitting terms).
inline ScalarField chemical_potential(const Grid& g, const ScalarField& c, const FreeEnergy& e,
                                      double width = 1.0) {
  ScalarField lap = laplacian_neumann(g, c);
  ScalarField mu = make_scalar(g);
  for (std::size_t k = 0; k < mu.a.size(); ++k)
    mu.a[k] = phi_eval(e, c.a[k]).phi / width - width * lap.a[k];
  return mu;
}

/// E_mix = integral of w |grad c|^2 / 2 + Phi(c)/w, with the face-based
/// gradient quadrature whose variation is exactly -Lap.
inline double mixing_energy(const Grid& g, const ScalarField& c, const FreeEnergy& e, double width = 1.0) {
  VectorField gc = gradient_faces(g, c);
  double epot = 0.0;
  for (double x : c.a) epot += phi_eval_global(e, x).Phi;
  return 0.5 * width * inner(g, gc, gc) + epot * g.cell_area() / width;
}

/// Conservative centered transport divergence Div(cbar * w) at cells;
/// cbar is the two-point face average of c. Wall faces carry no flux.
inline ScalarField transport_divergence(const Grid& g, const ScalarField& c, const VectorField& w) {
  VectorField flux = make_vector(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < flux.u.nx; ++i)
      flux.u(i, j) = w.u(i, j) * 0.5 * (cell_at(g, c, i - 1, j) + cell_at(g, c, i, j));
  for (int j = 0; j < flux.v.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      flux.v(i, j) = w.v(i, j) * 0.5 * (cell_at(g, c, i, j - 1) + cell_at(g, c, i, j));
  clamp_normal_boundary_faces(g, flux);
  return divergence(g, flux);
}

struct CHStepResult {
  ScalarField c;
  ScalarField mu;
  int picard_iters = 0;
  int clamp_count = 0;   // potential evaluations outside the admissible range
  double residual = 0.0;
};

class CahnHilliardStepper {
 public:
  CahnHilliardStepper(const Grid& g, FreeEnergy energy, CHStepParams params)
      : grid_(g), energy_(energy), params_(params), solver_(make_cell_solver(g)) {
    energy_.validate();
    params_.validate(energy_);
  }

  const CHStepParams& params() const { return params_; }
  void set_dt(double dt) { params_.dt = dt; }

  /// One step with an already-smoothed transport velocity u_tilde
  /// (discretely divergence free; checked).
  CHStepResult step_with_transport(const ScalarField& c0, const VectorField& u_tilde, double dt) const {
    const double divres = linf_norm(divergence(grid_, u_tilde));
    if (!(divres <= 1e-10 * std::max(1.0, linf_norm(u_tilde.u) + linf_norm(u_tilde.v))))
      throw std::invalid_argument("ch_step: transport velocity is not divergence free");

    const double m = params_.m, S = params_.splitting_const, w = params_.interface_width;
    ScalarField conv = transport_divergence(grid_, c0, u_tilde);
    ScalarField lap_c0 = laplacian_neumann(grid_, c0);

    // increment form: A delta = -dt conv + dt m Lap(phi(c0+delta)/w - w Lap c0),
    // A = I + dt m S (-Lap) + dt m w Lap^2
    ScalarField delta = make_scalar(grid_);
    ScalarField work = make_scalar(grid_);
    CHStepResult out;
    const double denom = std::max(l2_norm(grid_, c0), 1.0);
    double res = 0.0;
    int it = 0;
    for (; it < params_.max_picard; ++it) {
      int clamps = 0;
      for (std::size_t k = 0; k < work.a.size(); ++k) {
        const PhiEval pe = phi_eval_global(energy_, c0.a[k] + delta.a[k]);
        if (pe.clamped) ++clamps;
        work.a[k] = pe.phi / w - w * lap_c0.a[k];
      }
      ScalarField b = laplacian_neumann(grid_, work);
      for (std::size_t k = 0; k < b.a.size(); ++k) b.a[k] = dt * (m * b.a[k] - conv.a[k]);
      ScalarField delta_new = solver_.solve(b, 1.0, dt * m * S, dt * m * w);
      res = 0.0;
      for (std::size_t k = 0; k < delta.a.size(); ++k) {
        const double d = delta_new.a[k] - delta.a[k];
        res += d * d;
      }
      res = std::sqrt(res * grid_.cell_area()) / denom;
      delta = std::move(delta_new);
      out.clamp_count = clamps;
      if (res <= params_.tol) { ++it; break; }
    }
    if (res > params_.tol)
      throw StepRejected("ch_step: Picard did not reach tol=" + std::to_string(params_.tol) + " in " +
                         std::to_string(params_.max_picard) + " iterations (residual " +
                         std::to_string(res) + "); reduce dt");

    out.picard_iters = it;
    out.residual = res;
    out.c = c0;
    axpy(1.0, delta, out.c);
    // scheme chemical potential: phi(c1)/w + S (c1 - c0) - w Lap c1
    ScalarField lap_c1 = laplacian_neumann(grid_, out.c);
    out.mu = make_scalar(grid_);
    for (std::size_t k = 0; k < out.mu.a.size(); ++k)
      out.mu.a[k] = phi_eval_global(energy_, out.c.a[k]).phi / w + S * delta.a[k] - w * lap_c1.a[k];
    return out;
  }

  /// Spec-shaped entry: smooths v with the kernel (Psi_eps) first.
  CHStepResult step(const ScalarField& c0, const VectorField& v, const SmoothingOperator& psi,
                    double dt) const {
    return step_with_transport(c0, psi.apply(v), dt);
  }

 private:
  Grid grid_;
  FreeEnergy energy_;
  CHStepParams params_;
  DiagSolver2D solver_;
};

}  // namespace nnch
