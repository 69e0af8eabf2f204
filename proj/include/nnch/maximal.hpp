// Desk-scale probe of the level-set machinery behind the solenoidal
// parabolic Lipschitz truncation: discrete parabolic maximal functions on
// a space-time cylinder and the decay of super-level-set measures along
// the double-exponential threshold ladder lambda_k = 2^(2^k).
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "nnch/field.hpp"
#include "nnch/operators.hpp"

namespace nnch {

/// Scalar samples on a space-time cylinder Q0 = I0 x B0: nt uniform time
/// slices of an nxs-by-nys spatial window with spacings (hx, hy, dt).
struct SpaceTimeField {
  int nxs = 0, nys = 0, nt = 0;
  double hx = 0, hy = 0, dt = 0;
  std::vector<Field2D> slices;

  double cell_volume() const { return hx * hy * dt; }
  void validate() const {
    if (nt < 8) throw std::invalid_argument("SpaceTimeField: need at least 8 time slices");
    if (int(slices.size()) != nt) throw std::invalid_argument("SpaceTimeField: slice count mismatch");
    for (const Field2D& s : slices)
      if (s.nx != nxs || s.ny != nys) throw std::invalid_argument("SpaceTimeField: slice shape mismatch");
  }
};

/// Parabolic maximal function: at every space-time point the supremum of
/// averages of |f| over cylinders (spatial radius r, time extent r^2,
/// r from the dyadic ladder h, 2h, 4h, ... fitting the window), clipped to
/// the cylinder Q0, plus the degenerate single-cell cylinder, so
/// maximal(f) >= |f| pointwise.
inline SpaceTimeField parabolic_maximal(const SpaceTimeField& f) {
  f.validate();
  SpaceTimeField out = f;
  for (Field2D& s : out.slices)
    for (double& x : s.a) x = std::abs(x);
  const SpaceTimeField& absf = out;  // alias: out currently holds |f|

  SpaceTimeField result = absf;  // max with the degenerate cylinder

  const double h = std::min(f.hx, f.hy);
  const double rmax = 0.5 * std::max(f.nxs * f.hx, f.nys * f.hy);
  for (double r = h; r <= rmax; r *= 2.0) {
    // spatial disc average per slice, clipped to the window
    const int ax = int(std::floor(r / f.hx)), ay = int(std::floor(r / f.hy));
    std::vector<Field2D> disc_sum(f.nt, Field2D(f.nxs, f.nys));
    Field2D disc_cnt(f.nxs, f.nys);
    for (int t = 0; t < f.nt; ++t)
      for (int j = 0; j < f.nys; ++j)
        for (int i = 0; i < f.nxs; ++i) {
          double s = 0.0;
          int cnt = 0;
          for (int dj = -ay; dj <= ay; ++dj) {
            const int jj = j + dj;
            if (jj < 0 || jj >= f.nys) continue;
            for (int di = -ax; di <= ax; ++di) {
              const int ii = i + di;
              if (ii < 0 || ii >= f.nxs) continue;
              if (di * f.hx * di * f.hx + dj * f.hy * dj * f.hy > r * r) continue;
              s += absf.slices[t](ii, jj);
              ++cnt;
            }
          }
          disc_sum[t](i, j) = s;
          if (t == 0) disc_cnt(i, j) = double(cnt);
        }
    // time window |t' - t| <= r^2, clipped; the spatial count is
    // slice-independent so the cylinder average is a ratio of sums
    const int at = int(std::floor(r * r / f.dt));
    for (int t = 0; t < f.nt; ++t) {
      const int t0 = std::max(0, t - at), t1 = std::min(f.nt - 1, t + at);
      for (int j = 0; j < f.nys; ++j)
        for (int i = 0; i < f.nxs; ++i) {
          double s = 0.0;
          for (int tt = t0; tt <= t1; ++tt) s += disc_sum[tt](i, j);
          const double avg = s / (disc_cnt(i, j) * double(t1 - t0 + 1));
          if (avg > result.slices[t](i, j)) result.slices[t](i, j) = avg;
        }
    }
  }
  return result;
}

struct LevelSetReport {
  std::vector<double> lambda;    // 2^(2^k)
  std::vector<double> measure;   // |O_k|, space-time volume
  std::vector<double> ratio;     // measure[k+1] / measure[k] (0 when empty)
  bool resolution_exhausted = false;  // some nonzero |O_k| at single-cell granularity
  double divfree_residual = 0.0;      // distributional d_t u = -Div G check
};

namespace detail {

/// Pointwise Frobenius norm of the full velocity gradient, at centers of
/// the window (one-sided copies at the window edge).
inline Field2D grad_norm_window(const Field2D& u, const Field2D& v, double hx, double hy) {
  const int nx = u.nx, ny = u.ny;
  Field2D r(nx, ny);
  auto cl = [](int i, int n) { return std::min(std::max(i, 0), n - 1); };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double ux = (u(cl(i + 1, nx), j) - u(cl(i - 1, nx), j)) / ((cl(i + 1, nx) - cl(i - 1, nx)) * hx);
      const double uy = (u(i, cl(j + 1, ny)) - u(i, cl(j - 1, ny))) / ((cl(j + 1, ny) - cl(j - 1, ny)) * hy);
      const double vx = (v(cl(i + 1, nx), j) - v(cl(i - 1, nx), j)) / ((cl(i + 1, nx) - cl(i - 1, nx)) * hx);
      const double vy = (v(i, cl(j + 1, ny)) - v(i, cl(j - 1, ny))) / ((cl(j + 1, ny) - cl(j - 1, ny)) * hy);
      r(i, j) = std::sqrt(ux * ux + uy * uy + vx * vx + vy * vy);
    }
  return r;
}

}  // namespace detail

/// Space-time vector/tensor samples for the lab: u as two scalar
/// components at window centers, G split into G1 + G2 given by their
/// pointwise Frobenius norms.
struct TruncationInput {
  SpaceTimeField u_x, u_y;     // difference velocity components
  SpaceTimeField g1_norm;      // |G1| (stress-difference part)
  SpaceTimeField g2_norm;      // |G2| (convective/capillary part)
};

/// Level sets O_k = {M(|grad u|) > l_k} u {M(|G1|) > l_k^{q-1}} u
/// {M(|G2|) > l_k} for l_k = 2^(2^k), k = 0..K-1. The G1 threshold power
/// mirrors the q' duality scaling of the stress part. Returns exact
/// nestedness by construction (same maximal fields, growing thresholds).
inline LevelSetReport levelset_decay(const TruncationInput& in, double q, int K) {
  in.u_x.validate();
  in.g1_norm.validate();
  in.g2_norm.validate();
  if (K < 1) throw std::invalid_argument("levelset_decay: K must be >= 1");
  if (!(q > 1.0)) throw std::invalid_argument("levelset_decay: q must exceed 1");

  // maximal function of |grad u|
  SpaceTimeField gu = in.u_x;
  for (int t = 0; t < gu.nt; ++t)
    gu.slices[t] = detail::grad_norm_window(in.u_x.slices[t], in.u_y.slices[t], in.u_x.hx, in.u_x.hy);
  const SpaceTimeField m_gu = parabolic_maximal(gu);
  const SpaceTimeField m_g1 = parabolic_maximal(in.g1_norm);
  const SpaceTimeField m_g2 = parabolic_maximal(in.g2_norm);

  LevelSetReport rep;
  const double vol = in.u_x.cell_volume();
  for (int k = 0; k < K; ++k) {
    const double lam = std::pow(2.0, std::pow(2.0, double(k)));
    const double lam_g1 = std::pow(lam, q - 1.0);
    std::int64_t count = 0;
    for (int t = 0; t < m_gu.nt; ++t)
      for (std::size_t i = 0; i < m_gu.slices[t].a.size(); ++i)
        if (m_gu.slices[t].a[i] > lam || m_g1.slices[t].a[i] > lam_g1 || m_g2.slices[t].a[i] > lam)
          ++count;
    rep.lambda.push_back(lam);
    rep.measure.push_back(double(count) * vol);
    if (count == 1) rep.resolution_exhausted = true;
  }
  for (std::size_t k = 0; k + 1 < rep.measure.size(); ++k)
    rep.ratio.push_back(rep.measure[k] > 0.0 ? rep.measure[k + 1] / rep.measure[k] : 0.0);
  // the d_t u = -Div G residual needs the G components, not just norms;
  // pipeline drivers fill it in via divform_residual
  return rep;
}

namespace detail {

struct Bump {  // (1-z^2)^3 on |z|<1, C^2 with compact support
  static double f(double z) { return std::abs(z) < 1.0 ? std::pow(1.0 - z * z, 3) : 0.0; }
  static double df(double z) {
    if (std::abs(z) >= 1.0) return 0.0;
    const double w = 1.0 - z * z;
    return -6.0 * z * w * w;
  }
  static double d2f(double z) {
    if (std::abs(z) >= 1.0) return 0.0;
    const double w = 1.0 - z * z;
    return -6.0 * w * w + 24.0 * z * z * w;
  }
};

}  // namespace detail

/// Residual of the distributional relation d_t u = -Div(G) tested against
/// divergence-free space-time fields phi = curl(S) b(t), with S an
/// analytic spatial bump compactly supported in the window and b a time
/// bump. After integration by parts the relation reads
///   integral( u . d_t phi + G : grad phi ) = 0;
/// the returned value is that integral over the sum of absolute
/// contributions, maximized over a small family of bump centers.
inline double divform_residual(const SpaceTimeField& ux, const SpaceTimeField& uy,
                               const SpaceTimeField& gxx, const SpaceTimeField& gxy,
                               const SpaceTimeField& gyx, const SpaceTimeField& gyy) {
  ux.validate();
  const int nx = ux.nxs, ny = ux.nys, nt = ux.nt;
  const double hx = ux.hx, hy = ux.hy, dt = ux.dt;
  const double Wx = nx * hx, Wy = ny * hy, T = (nt - 1) * dt;
  using detail::Bump;
  double worst = 0.0;
  const double centers[3][2] = {{0.5, 0.5}, {0.4, 0.6}, {0.6, 0.4}};
  for (const auto& c0 : centers) {
    const double cx = c0[0] * Wx, cy = c0[1] * Wy, wx = 0.35 * Wx, wy = 0.35 * Wy;
    const double ct = 0.5 * T, wt = 0.4 * T;
    double num = 0.0, den = 0.0;
    for (int t = 0; t < nt; ++t) {
      const double zt = (t * dt - ct) / wt;
      const double b = Bump::f(zt), bdot = Bump::df(zt) / wt;
      if (b == 0.0 && bdot == 0.0) continue;
      for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
          const double zx = ((i + 0.5) * hx - cx) / wx, zy = ((j + 0.5) * hy - cy) / wy;
          const double Bx = Bump::f(zx), By = Bump::f(zy);
          const double Bx1 = Bump::df(zx) / wx, By1 = Bump::df(zy) / wy;
          const double Bx2 = Bump::d2f(zx) / (wx * wx), By2 = Bump::d2f(zy) / (wy * wy);
          // phi = (S_y, -S_x) b with S = Bx By
          const double phx = Bx * By1, phy = -Bx1 * By;
          const double sxy = Bx1 * By1, syy = Bx * By2, sxx = Bx2 * By;
          const double t_ux = ux.slices[t](i, j) * phx * bdot;
          const double t_uy = uy.slices[t](i, j) * phy * bdot;
          // grad phi = [[S_xy, S_yy], [-S_xx, -S_xy]] b
          const double t_g = (gxx.slices[t](i, j) * sxy + gxy.slices[t](i, j) * syy -
                              gyx.slices[t](i, j) * sxx - gyy.slices[t](i, j) * sxy) * b;
          num += t_ux + t_uy + t_g;
          den += std::abs(t_ux) + std::abs(t_uy) + std::abs(t_g);
        }
    }
    worst = std::max(worst, den > 0.0 ? std::abs(num) / den : 0.0);
  }
  return worst;
}

}  // namespace nnch
