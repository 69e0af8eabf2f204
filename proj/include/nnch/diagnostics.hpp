// Regression drivers used by the verify subcommand and the acceptance
// suite: the power-law Poiseuille reference (pointwise inversion of the
// 1D constitutive relation plus quadrature, valid for any q, delta, kind)
// and the steady-channel march it is compared against.
#pragma once

#include <cmath>
#include <vector>

#include "nnch/constitutive.hpp"
#include "nnch/field.hpp"
#include "nnch/helmholtz.hpp"
#include "nnch/momentum.hpp"
#include "nnch/operators.hpp"

namespace nnch {

/// Shear stress S12 of the unidirectional profile u(y) with u' = s.
inline double shear_stress_1d(const ConstitutiveLaw& law, double c, double s) {
  return stress_eval(law, c, Mat2{0.0, s, 0.0, 0.0}).a12;
}

/// Invert s -> S12(s) = tau (monotone) by bracketed bisection.
inline double invert_shear_stress(const ConstitutiveLaw& law, double c, double tau) {
  const double sign = tau < 0.0 ? -1.0 : 1.0;
  const double target = std::abs(tau);
  if (target == 0.0) return 0.0;
  double hi = 1.0;
  while (shear_stress_1d(law, c, hi) < target && hi < 1e12) hi *= 2.0;
  double lo = 0.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (shear_stress_1d(law, c, mid) < target) lo = mid;
    else hi = mid;
    if (hi - lo <= 1e-15 * std::max(1.0, hi)) break;
  }
  return sign * 0.5 * (lo + hi);
}

/// Steady channel profile driven by body force G with walls at y = 0, ly:
/// S12(u'(y)) = G (ly/2 - y), u(0) = 0, integrated by composite Simpson on
/// a fine ladder and sampled at the requested heights.
inline std::vector<double> poiseuille_reference_profile(const ConstitutiveLaw& law, double c, double G,
                                                        double ly, const std::vector<double>& heights) {
  const int nfine = 1 << 14;
  const double dy = ly / nfine;
  std::vector<double> u(nfine + 1, 0.0);
  auto uprime = [&](double y) { return invert_shear_stress(law, c, G * (0.5 * ly - y)); };
  for (int k = 0; k < nfine; ++k) {
    const double y0 = k * dy;
    u[k + 1] = u[k] + dy / 6.0 * (uprime(y0) + 4.0 * uprime(y0 + 0.5 * dy) + uprime(y0 + dy));
  }
  std::vector<double> out;
  out.reserve(heights.size());
  for (double y : heights) {
    const double t = std::clamp(y / dy, 0.0, double(nfine));
    const int k = std::min(int(t), nfine - 1);
    out.push_back(u[k] + (t - k) * (u[k + 1] - u[k]));
  }
  return out;
}

struct PoiseuilleResult {
  std::vector<double> profile;    // column-averaged u at the u rows
  std::vector<double> reference;  // oracle at the same heights
  double l2_rel_error = 0.0;
  int steps_to_steady = 0;
};

/// March the channel to steady state and compare with the reference.
inline PoiseuilleResult run_poiseuille(const ConstitutiveLaw& law, double G, int ny, double dt,
                                       int max_steps, double steady_tol = 1e-9) {
  const int nx = 8;
  Grid g(nx, ny, 1.0, 2.0, BcMode::channel_x);
  HelmholtzProjector proj(g);
  MomentumStepParams mp;
  mp.dt = dt;
  mp.picard_tol = 1e-10;
  mp.max_picard = 300;
  mp.theta_relax = 0.6;  // q > 2 is non-contractive undamped at large dt
  MomentumStepper stepper(g, law, mp, VelocityCutoff{0.0}, proj);

  ScalarField c = make_scalar(g, 0.0), p = make_scalar(g);
  VectorField v = make_vector(g);
  VectorField f = make_vector(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < f.u.nx; ++i) f.u(i, j) = G;
  clamp_normal_boundary_faces(g, f);

  PoiseuilleResult res;
  for (int n = 0; n < max_steps; ++n) {
    // dt ramp: from rest the regularized q < 2 viscosity starts at its
    // delta spike, so the first steps climb out of it with small dt
    const double dt_n = n < 12 ? dt * std::pow(2.0, n - 12) : dt;
    MomentumStepResult ms = stepper.step(v, p, c, f, dt_n);
    VectorField diff = ms.v;
    axpy(-1.0, v, diff);
    const double change = l2_norm(g, diff) / (dt_n * std::max(1.0, l2_norm(g, ms.v)));
    v = std::move(ms.v);
    p = std::move(ms.p);
    res.steps_to_steady = n + 1;
    if (n > 12 && change < steady_tol) break;
  }

  std::vector<double> heights;
  res.profile.resize(ny);
  for (int j = 0; j < ny; ++j) {
    heights.push_back((j + 0.5) * g.hy());
    double s = 0.0;
    for (int i = 0; i < g.nx; ++i) s += v.u(i, j);
    res.profile[j] = s / g.nx;
  }
  res.reference = poiseuille_reference_profile(law, 0.0, G, g.ly, heights);
  double num = 0.0, den = 0.0;
  for (int j = 0; j < ny; ++j) {
    num += (res.profile[j] - res.reference[j]) * (res.profile[j] - res.reference[j]);
    den += res.reference[j] * res.reference[j];
  }
  res.l2_rel_error = std::sqrt(num / den);
  return res;
}

}  // namespace nnch
