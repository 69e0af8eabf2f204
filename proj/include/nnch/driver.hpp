// Batch drivers: initial states, run_simulation (ledger + snapshots on
// disk), and the mollification-refinement study that shadows the paper's
// eps -> 0 convergences with computable Cauchy distances.
#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "nnch/config.hpp"
#include "nnch/io.hpp"
#include "nnch/stepper.hpp"

namespace nnch {

/// Band-limited random field: modes 0 < |k| <= 4 (integer wavevectors)
/// with seeded coefficients, scaled to the requested amplitude. Resolved
/// on any grid, so the first implicit step sees no unresolved transient.
inline ScalarField band_limited_noise(const Grid& g, double amp, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  constexpr int kmax = 4;
  ScalarField c = make_scalar(g);
  for (int kx = 0; kx <= kmax; ++kx)
    for (int ky = -kmax; ky <= kmax; ++ky) {
      if (kx == 0 && ky <= 0) continue;
      const double a = u(rng), b = u(rng);
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
          const double ph = 2.0 * M_PI * (kx * (i + 0.5) / g.nx + ky * (j + 0.5) / g.ny);
          c(i, j) += a * std::cos(ph) + b * std::sin(ph);
        }
    }
  const double mx = linf_norm(c);
  if (mx > 0.0)
    for (double& x : c.a) x *= amp / mx;
  return c;
}

/// Initial (c0, v0) from the [init] section; all randomness from the run
/// seed. Velocities are built from a node streamfunction, so they are
/// discretely divergence free by construction.
inline SimState initial_state(const RunConfig& cfg) {
  const Grid g = cfg.grid();
  SimState s;
  s.c = make_scalar(g);
  s.p = make_scalar(g);
  s.v = make_vector(g);

  const double cx = 0.5 * g.lx, cy = 0.5 * g.ly;
  if (cfg.init == InitKind::spinodal) {
    s.c = band_limited_noise(g, cfg.c_amp, cfg.rng_seed);
    for (double& x : s.c.a) x += cfg.c_mean;
  } else {
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const double x = (i + 0.5) * g.hx(), y = (j + 0.5) * g.hy();
        switch (cfg.init) {
          case InitKind::smooth:
            s.c(i, j) = cfg.c_mean + cfg.c_amp * std::cos(2.0 * M_PI * x / g.lx) *
                                         std::cos(2.0 * M_PI * y / g.ly);
            break;
          case InitKind::droplet: {
            const double r = std::hypot(x - cx, y - cy);
            s.c(i, j) = cfg.c_mean - cfg.c_amp * std::tanh(r - 0.25 * std::min(g.lx, g.ly));
            break;
          }
          case InitKind::stratified:
            s.c(i, j) = cfg.c_mean - cfg.c_amp * std::tanh(y - cy);
            break;
          default:
            break;
        }
      }
  }

  if (cfg.v_amp != 0.0) {
    // psi = A (lx/2pi)(ly/2pi) sin(2pi x/lx) sin(2pi y/ly) at nodes
    auto psi = [&](int i, int j) {
      return cfg.v_amp * (g.lx / (2.0 * M_PI)) * std::sin(2.0 * M_PI * i * g.hx() / g.lx) *
             std::sin(2.0 * M_PI * j * g.hy() / g.ly);
    };
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < s.v.u.nx; ++i) s.v.u(i, j) = (psi(i, j + 1) - psi(i, j)) / g.hy();
    for (int j = 0; j < s.v.v.ny; ++j)
      for (int i = 0; i < g.nx; ++i) s.v.v(i, j) = -(psi(i + 1, j) - psi(i, j)) / g.hx();
    clamp_normal_boundary_faces(g, s.v);
  }

  s.mu = chemical_potential(g, s.c, cfg.potential, cfg.ch.interface_width);
  return s;
}

inline CoupledStepper make_stepper(const RunConfig& cfg) {
  const Grid g = cfg.grid();
  CoupledParams p;
  p.ch = cfg.ch;
  p.momentum = cfg.momentum;
  p.mode = cfg.coupling_mode;
  p.capillary = cfg.capillary_form;
  p.fp_tol = cfg.fp_tol;
  p.fp_max = cfg.fp_max;
  return CoupledStepper(g, cfg.potential, cfg.law, p,
                        MollifierKernel::make(g, cfg.mollify_eps_effective()),
                        VelocityCutoff{cfg.cutoff_eps_effective()});
}

struct RunArtifacts {
  SimState final_state;
  std::string ledger_path;
  std::vector<std::string> snapshot_paths;
};

namespace detail {

inline void write_state_snapshots(const RunConfig& cfg, const SimState& s, long index,
                                  std::vector<std::string>& paths) {
  namespace fs = std::filesystem;
  char tag[32];
  std::snprintf(tag, sizeof tag, "snap_%06ld", index);
  const std::string base = (fs::path(cfg.out_dir) / tag).string();
  struct Item { FieldKind k; const Field2D* f; };
  const Item items[] = {{FieldKind::c, &s.c}, {FieldKind::mu, &s.mu}, {FieldKind::p, &s.p},
                        {FieldKind::u, &s.v.u}, {FieldKind::v, &s.v.v}};
  for (const Item& it : items) {
    if (cfg.write_bin) {
      const std::string p = base + "_" + to_string(it.k) + ".bin";
      write_snapshot(p, it.k, *it.f);
      paths.push_back(p);
    }
    if (cfg.write_csv) {
      const std::string p = base + "_" + to_string(it.k) + ".csv";
      write_csv(p, *it.f);
      paths.push_back(p);
    }
  }
}

}  // namespace detail

/// Run T/dt coupled steps from the configured initial data, persisting the
/// ledger and snapshots. The last valid state is on disk even when a step
/// rejection exhausts its retries (the exception propagates after the
/// flush).
inline RunArtifacts run_simulation(const RunConfig& cfg,
                                   const std::function<void(const SimState&)>& observer = {}) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  CoupledStepper stepper = make_stepper(cfg);
  RunArtifacts art;
  SimState s = initial_state(cfg);
  stepper.init_ledger(s);
  detail::write_state_snapshots(cfg, s, 0, art.snapshot_paths);
  if (observer) observer(s);

  auto flush = [&] {
    art.ledger_path = (fs::path(cfg.out_dir) / "ledger.csv").string();
    std::FILE* f = std::fopen(art.ledger_path.c_str(), "w");
    if (!f) throw std::runtime_error("cannot write " + art.ledger_path);
    stepper.ledger().write_csv(f);
    std::fclose(f);
  };

  const double dt = cfg.momentum.dt;
  try {
    while (s.t < cfg.t_end - 1e-12 * std::max(1.0, cfg.t_end)) {
      const double want = std::min(dt, cfg.t_end - s.t);
      stepper.advance(s, want);
      if (cfg.snapshot_every > 0 && s.step % cfg.snapshot_every == 0)
        detail::write_state_snapshots(cfg, s, s.step, art.snapshot_paths);
      if (observer) observer(s);
    }
  } catch (...) {
    detail::write_state_snapshots(cfg, s, s.step, art.snapshot_paths);
    flush();
    throw;
  }
  if (cfg.snapshot_every == 0 || s.step % cfg.snapshot_every != 0)
    detail::write_state_snapshots(cfg, s, s.step, art.snapshot_paths);
  flush();
  art.final_state = std::move(s);
  return art;
}

// --- mollification refinement study -----------------------------------------

struct EpsStudyReport {
  std::vector<double> eps;
  std::vector<double> dist_v;     // ||v_i - v_{i+1}||_{L2(Q_T)}
  std::vector<double> dist_c;
  std::vector<double> psi_err_v0; // ||Psi_eps v0 - v0||_2 per eps
  bool v_decreasing = false, c_decreasing = false, psi_decreasing = false;
  bool complete = false;
  std::string failure;
};

/// Identical scenarios for each mollification level; reports pairwise
/// space-time L2 Cauchy distances, the computable shadow of the paper's
/// eps -> 0 strong convergence. Requires >= 3 non-increasing entries
/// (equal entries are legal and give zero distances).
inline EpsStudyReport eps_convergence_study(const RunConfig& base, const std::vector<double>& eps_list) {
  if (eps_list.size() < 3) throw std::invalid_argument("eps_convergence_study: need >= 3 eps values");
  for (std::size_t i = 0; i + 1 < eps_list.size(); ++i)
    if (eps_list[i + 1] > eps_list[i] + 1e-15)
      throw std::invalid_argument("eps_convergence_study: eps values must be non-increasing");

  const Grid g = base.grid();
  EpsStudyReport rep;
  rep.eps = eps_list;

  using Series = std::vector<std::pair<VectorField, ScalarField>>;
  std::vector<Series> series;
  const SimState s0 = initial_state(base);
  HelmholtzProjector proj(g);

  for (double eps : eps_list) {
    RunConfig cfg = base;
    cfg.mollify_eps = eps;
    cfg.cutoff_eps = base.cutoff_eps >= 0.0 ? base.cutoff_eps : eps;
    CoupledStepper st = make_stepper(cfg);
    SimState s = s0;
    st.init_ledger(s);
    Series ser;
    ser.emplace_back(s.v, s.c);
    try {
      const double dt = cfg.momentum.dt;
      while (s.t < cfg.t_end - 1e-12) {
        st.step(s, std::min(dt, cfg.t_end - s.t));  // no dt adaptation: series must stay aligned
        ser.emplace_back(s.v, s.c);
      }
    } catch (const std::exception& e) {
      rep.failure = std::string("run at eps=") + std::to_string(eps) + " failed: " + e.what();
      return rep;  // partial report
    }
    series.push_back(std::move(ser));

    SmoothingOperator psi(g, MollifierKernel::make(g, eps), proj);
    VectorField d = psi.apply(s0.v);
    axpy(-1.0, s0.v, d);
    rep.psi_err_v0.push_back(l2_norm(g, d));
  }

  const double dt = base.momentum.dt;
  for (std::size_t r = 0; r + 1 < series.size(); ++r) {
    double sv = 0.0, sc = 0.0;
    const std::size_t n = std::min(series[r].size(), series[r + 1].size());
    for (std::size_t k = 0; k < n; ++k) {
      VectorField dv = series[r][k].first;
      axpy(-1.0, series[r + 1][k].first, dv);
      ScalarField dc = series[r][k].second;
      axpy(-1.0, series[r + 1][k].second, dc);
      sv += dt * inner(g, dv, dv);
      sc += dt * inner(g, dc, dc);
    }
    rep.dist_v.push_back(std::sqrt(sv));
    rep.dist_c.push_back(std::sqrt(sc));
  }
  auto strictly_dec = [](const std::vector<double>& d) {
    for (std::size_t i = 0; i + 1 < d.size(); ++i)
      if (!(d[i + 1] < d[i])) return false;
    return !d.empty();
  };
  rep.v_decreasing = strictly_dec(rep.dist_v);
  rep.c_decreasing = strictly_dec(rep.dist_c);
  rep.psi_decreasing = strictly_dec(rep.psi_err_v0);
  rep.complete = true;
  return rep;
}

}  // namespace nnch
