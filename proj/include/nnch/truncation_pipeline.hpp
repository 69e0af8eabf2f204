// Builds the truncation-lab inputs from two solver snapshot series:
// difference velocity u = v_a - v_b at window centers, the stress part
// G1 = S(c_a, Dv_a) - S(c_b, Dv_b), and the convective/capillary part
// G2, all collocated on a space-time cylinder strictly inside the grid.
#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "nnch/constitutive.hpp"
#include "nnch/helmholtz.hpp"
#include "nnch/io.hpp"
#include "nnch/maximal.hpp"
#include "nnch/operators.hpp"

namespace nnch {

struct StateSeries {
  std::vector<VectorField> v;
  std::vector<ScalarField> c;
  double dt = 0.0;  // time between consecutive entries
};

/// Load the snap_* series written by run_simulation from a directory.
inline StateSeries load_series(const Grid& g, const std::string& dir, double dt_between) {
  namespace fs = std::filesystem;
  std::map<long, std::string> bases;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.rfind("snap_", 0) == 0 && name.size() > 11 && name.substr(name.size() - 6) == "_u.bin")
      bases[std::stol(name.substr(5, 6))] = (e.path().parent_path() / name.substr(0, 11)).string();
  }
  if (bases.empty()) throw std::runtime_error("no snapshot series found in " + dir);
  StateSeries s;
  s.dt = dt_between;
  for (const auto& [idx, base] : bases) {
    Snapshot u = read_snapshot(base + "_u.bin");
    Snapshot v = read_snapshot(base + "_v.bin");
    Snapshot c = read_snapshot(base + "_c.bin");
    if (u.field.nx != g.nxu() || u.field.ny != g.ny || c.field.nx != g.nx)
      throw std::runtime_error("snapshot shape does not match the grid: " + base);
    s.v.push_back(VectorField{std::move(u.field), std::move(v.field)});
    s.c.push_back(std::move(c.field));
  }
  return s;
}

struct TruncationData {
  TruncationInput in;
  SpaceTimeField gxx, gxy, gyx, gyy;  // total G = G1 + G2 components
};

/// Collocate the difference fields on the cylinder [i0, i0+nxs) x
/// [j0, j0+nys) x all slices.
inline TruncationData truncation_input_from_series(const Grid& g, const ConstitutiveLaw& law,
                                                   const VelocityCutoff& cutoff, const StateSeries& a,
                                                   const StateSeries& b, int i0, int j0, int nxs,
                                                   int nys) {
  const int nt = int(std::min(a.v.size(), b.v.size()));
  if (nt < 8) throw std::invalid_argument("truncation lab: need at least 8 aligned snapshots");
  if (i0 < 0 || j0 < 0 || i0 + nxs > g.nx || j0 + nys > g.ny)
    throw std::invalid_argument("truncation lab: window exceeds the grid");

  auto st = [&] {
    SpaceTimeField f;
    f.nxs = nxs;
    f.nys = nys;
    f.nt = nt;
    f.hx = g.hx();
    f.hy = g.hy();
    f.dt = a.dt;
    f.slices.assign(nt, Field2D(nxs, nys));
    return f;
  };
  TruncationData d{{st(), st(), st(), st()}, st(), st(), st(), st()};

  ScalarField uc = make_scalar(g), vc = make_scalar(g);
  ScalarField ubc = make_scalar(g), vbc = make_scalar(g);
  ScalarField gax = make_scalar(g), gay = make_scalar(g), gbx = make_scalar(g), gby = make_scalar(g);
  for (int t = 0; t < nt; ++t) {
    velocity_at_centers(g, a.v[t], uc, vc);
    velocity_at_centers(g, b.v[t], ubc, vbc);
    const TensorField da = sym_gradient(g, a.v[t]);
    const TensorField db = sym_gradient(g, b.v[t]);
    const ScalarField fa = velocity_cutoff_factor(g, a.v[t], cutoff);
    const ScalarField fb = velocity_cutoff_factor(g, b.v[t], cutoff);
    gradient_centers(g, a.c[t], gax, gay);
    gradient_centers(g, b.c[t], gbx, gby);

    for (int j = 0; j < nys; ++j)
      for (int i = 0; i < nxs; ++i) {
        const int I = i0 + i, J = j0 + j;
        d.in.u_x.slices[t](i, j) = uc(I, J) - ubc(I, J);
        d.in.u_y.slices[t](i, j) = vc(I, J) - vbc(I, J);

        const Mat2 Sa = stress_eval(law, std::clamp(a.c[t](I, J), law.c_min, law.c_max),
                                    Mat2{da.xx(I, J), da.xy(I, J), da.xy(I, J), da.yy(I, J)});
        const Mat2 Sb = stress_eval(law, std::clamp(b.c[t](I, J), law.c_min, law.c_max),
                                    Mat2{db.xx(I, J), db.xy(I, J), db.xy(I, J), db.yy(I, J)});
        const Mat2 g1 = Sa - Sb;
        d.in.g1_norm.slices[t](i, j) = g1.frob();

        // G2: cutoff convection difference plus capillary tensor difference
        const double axx = fa(I, J) * uc(I, J) * uc(I, J) - fb(I, J) * ubc(I, J) * ubc(I, J) +
                           gax(I, J) * gax(I, J) - gbx(I, J) * gbx(I, J);
        const double axy = fa(I, J) * uc(I, J) * vc(I, J) - fb(I, J) * ubc(I, J) * vbc(I, J) +
                           gax(I, J) * gay(I, J) - gbx(I, J) * gby(I, J);
        const double ayy = fa(I, J) * vc(I, J) * vc(I, J) - fb(I, J) * vbc(I, J) * vbc(I, J) +
                           gay(I, J) * gay(I, J) - gby(I, J) * gby(I, J);
        const Mat2 g2{axx, axy, axy, ayy};
        d.in.g2_norm.slices[t](i, j) = g2.frob();

        // d_t u = -Div G with G = -(S_a - S_b) + conv diff + capillary diff
        d.gxx.slices[t](i, j) = -g1.a11 + g2.a11;
        d.gxy.slices[t](i, j) = -g1.a12 + g2.a12;
        d.gyx.slices[t](i, j) = -g1.a21 + g2.a21;
        d.gyy.slices[t](i, j) = -g1.a22 + g2.a22;
      }
  }
  return d;
}

}  // namespace nnch
