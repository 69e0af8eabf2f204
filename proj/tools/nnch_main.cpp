// Batch front door: run a simulation, verify the property suite, drive the
// mollification-refinement sweep, or run the truncation lab on snapshot
// series. Exit status is 0 iff every executed check passed; tables are
// accompanied by machine-readable key=value lines.
#include <CLI11.hpp>

#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "nnch/diagnostics.hpp"
#include "nnch/driver.hpp"
#include "nnch/nnch.hpp"
#include "nnch/truncation_pipeline.hpp"

using namespace nnch;

namespace {

bool g_quiet = false;

void say(const char* fmt, ...) {
  if (g_quiet) return;
  va_list ap;
  va_start(ap, fmt);
  std::vfprintf(stdout, fmt, ap);
  va_end(ap);
}

struct CheckTable {
  int failures = 0;
  void row(const std::string& name, bool pass, double value, double threshold) {
    if (!pass) ++failures;
    say("  [%s] %-46s value=%-12.5g threshold=%.5g\n", pass ? "PASS" : "FAIL", name.c_str(), value,
        threshold);
    std::printf("check=%s pass=%d value=%.17g threshold=%.17g\n", name.c_str(), pass ? 1 : 0, value,
                threshold);
  }
};

RunConfig load_config(const std::string& path, const std::string& out_override, long seed_override,
                      const std::string& mode_override) {
  RunConfig cfg = path.empty() ? RunConfig{} : parse_config(path);
  if (!out_override.empty()) cfg.out_dir = out_override;
  if (seed_override >= 0) cfg.rng_seed = std::uint64_t(seed_override);
  if (mode_override == "lagged") cfg.coupling_mode = CouplingMode::lagged;
  else if (mode_override == "fixed_point") cfg.coupling_mode = CouplingMode::fixed_point;
  else if (!mode_override.empty()) throw ConfigError({"--mode must be lagged or fixed_point"});
  return cfg;
}

int cmd_run(const RunConfig& cfg) {
  RunArtifacts art = run_simulation(cfg);
  say("run finished: t=%.6g steps=%ld ledger=%s snapshots=%zu\n", art.final_state.t,
      art.final_state.step, art.ledger_path.c_str(), art.snapshot_paths.size());
  std::printf("run_t=%.17g run_steps=%ld ledger=%s\n", art.final_state.t, art.final_state.step,
              art.ledger_path.c_str());
  return 0;
}

int cmd_verify(const RunConfig& cfg) {
  CheckTable t;
  say("constitutive suite (10^4 seeded samples per law/potential):\n");
  {
    FreeEnergy dw;
    FreeEnergy lg;
    lg.kind = PotentialKind::logarithmic;
    struct LawSpec { const char* name; ConstitutiveLaw law; };
    std::vector<LawSpec> laws;
    for (double q : {1.5, 2.0, 3.0})
      laws.push_back({"power_law", ConstitutiveLaw{q, 1.0, 0.25, 1e-8, StressKind::power_law}});
    laws.push_back({"carreau", ConstitutiveLaw{1.5, 1.0, 0.25, 0.0, StressKind::carreau}});
    for (const auto& [name, law] : laws)
      for (const FreeEnergy* e : {&dw, &lg}) {
        AssumptionReport rep = check_assumption_1(law, *e, 10000, cfg.rng_seed);
        char label[96];
        std::snprintf(label, sizeof label, "assumption1_%s_q%.1f_%s", name, law.q,
                      e->kind == PotentialKind::double_well ? "double_well" : "logarithmic");
        t.row(label, rep.ok(), double(rep.violations.size()), 0.0);
      }
  }

  say("operator identities (64^2):\n");
  {
    Grid g(64, 64, 2.0 * M_PI, 2.0 * M_PI, BcMode::periodic);
    HelmholtzProjector proj(g);
    std::mt19937_64 rng(cfg.rng_seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    ScalarField f = make_scalar(g), h = make_scalar(g);
    for (double& x : f.a) x = u(rng);
    for (double& x : h.a) x = u(rng);
    const double ibp = std::abs(inner(g, laplacian_neumann(g, f), h) +
                                inner(g, gradient_faces(g, f), gradient_faces(g, h))) /
                       std::max(1.0, std::abs(inner(g, gradient_faces(g, f), gradient_faces(g, h))));
    t.row("integration_by_parts_relative", ibp <= 1e-12, ibp, 1e-12);

    VectorField w = make_vector(g);
    for (double& x : w.u.a) x = u(rng);
    for (double& x : w.v.a) x = u(rng);
    VectorField p1 = proj.project(w);
    VectorField p2 = proj.project(p1);
    axpy(-1.0, p1, p2);
    const double idem = l2_norm(g, p2) / std::max(1.0, l2_norm(g, p1));
    t.row("projector_idempotent", idem <= 1e-10, idem, 1e-10);
    const double ann = l2_norm(g, proj.project(gradient_faces(g, f))) / std::max(1.0, l2_norm(g, f));
    t.row("projector_kills_gradients", ann <= 1e-10, ann, 1e-10);

    SmoothingOperator psi(g, MollifierKernel::make(g, cfg.mollify_eps_effective()), proj);
    VectorField s1 = proj.project(w);
    VectorField z = make_vector(g);
    for (double& x : z.u.a) x = u(rng);
    for (double& x : z.v.a) x = u(rng);
    VectorField s2 = proj.project(z);
    const double adj = std::abs(inner(g, psi.apply(s1), s2) - inner(g, s1, psi.apply(s2))) /
                       std::max(1.0, l2_norm(g, s1) * l2_norm(g, s2));
    t.row("psi_eps_self_adjoint", adj <= 1e-10, adj, 1e-10);
  }

  say("power-law Poiseuille regression (64 transverse cells):\n");
  for (double q : {1.5, 2.0, 3.0}) {
    ConstitutiveLaw law;
    law.q = q;
    PoiseuilleResult r = run_poiseuille(law, 1.0, 64, 0.25, 400);
    char label[64];
    std::snprintf(label, sizeof label, "poiseuille_l2_error_q%.1f", q);
    t.row(label, r.l2_rel_error <= 0.02, r.l2_rel_error, 0.02);
  }

  say("coupled ledger residual (48^2 spinodal, 100 steps):\n");
  {
    RunConfig b;
    b.nx = b.ny = 48;
    b.lx = b.ly = 16.0 * M_PI;
    b.law.delta = 1e-3;
    b.ch.m = 4.0;
    b.momentum.dt = b.ch.dt = 5e-3;
    b.c_mean = 0.05;
    b.c_amp = 0.1;
    b.rng_seed = cfg.rng_seed;
    CoupledStepper st = make_stepper(b);
    SimState s = initial_state(b);
    st.init_ledger(s);
    for (int n = 0; n < 100; ++n) st.step(s, b.momentum.dt);
    const LedgerRow& last = st.ledger().rows.back();
    t.row("ledger_residual_over_E0", last.residual / st.ledger().E0 <= 1e-2,
          last.residual / st.ledger().E0, 1e-2);
    const double drift = std::abs(last.mass - st.ledger().rows.front().mass) /
                         std::abs(st.ledger().rows.front().mass);
    t.row("mass_relative_drift", drift <= 1e-12, drift, 1e-12);
    t.row("divergence_residual", last.div_res <= 1e-10, last.div_res, 1e-10);
  }

  say("%d check(s) failed\n", t.failures);
  return t.failures == 0 ? 0 : 1;
}

int cmd_sweep(RunConfig cfg, std::vector<double> eps_list) {
  if (eps_list.empty()) {
    const double h = cfg.lx / cfg.nx;
    eps_list = {8.0 * h, 4.0 * h, 2.0 * h};
  }
  EpsStudyReport rep = eps_convergence_study(cfg, eps_list);
  if (!rep.complete) {
    std::fprintf(stderr, "sweep aborted: %s\n", rep.failure.c_str());
    // partial report still goes out
  }
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  const std::string path = (fs::path(cfg.out_dir) / "eps_sweep.csv").string();
  std::FILE* f = std::fopen(path.c_str(), "w");
  std::fprintf(f, "eps_coarse,eps_fine,dist_v,dist_c\n");
  for (std::size_t i = 0; i < rep.dist_v.size(); ++i)
    std::fprintf(f, "%.17g,%.17g,%.17g,%.17g\n", rep.eps[i], rep.eps[i + 1], rep.dist_v[i],
                 rep.dist_c[i]);
  std::fclose(f);
  for (std::size_t i = 0; i < rep.dist_v.size(); ++i) {
    say("  eps %-10.4g -> %-10.4g   |v_i - v_j|=%.5e  |c_i - c_j|=%.5e\n", rep.eps[i], rep.eps[i + 1],
        rep.dist_v[i], rep.dist_c[i]);
    std::printf("sweep_pair=%zu dist_v=%.17g dist_c=%.17g\n", i, rep.dist_v[i], rep.dist_c[i]);
  }
  std::printf("sweep_v_decreasing=%d sweep_c_decreasing=%d csv=%s\n", rep.v_decreasing ? 1 : 0,
              rep.c_decreasing ? 1 : 0, path.c_str());
  say("Cauchy distances %s\n", rep.v_decreasing && rep.c_decreasing ? "strictly decreasing"
                                                                    : "NOT strictly decreasing");
  return (rep.complete && rep.v_decreasing && rep.c_decreasing) ? 0 : 1;
}

int cmd_lab(RunConfig cfg, std::string series_a, std::string series_b, int K) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  const double dt_between = cfg.momentum.dt * std::max(1, cfg.snapshot_every);
  if (series_a.empty() || series_b.empty()) {
    // produce the two series here: the configured eps and its half
    RunConfig a = cfg, b = cfg;
    a.mollify_eps = cfg.mollify_eps_effective();
    b.mollify_eps = 0.5 * a.mollify_eps;
    a.out_dir = (fs::path(cfg.out_dir) / "series_a").string();
    b.out_dir = (fs::path(cfg.out_dir) / "series_b").string();
    if (a.snapshot_every == 0) a.snapshot_every = b.snapshot_every = 1;
    run_simulation(a);
    run_simulation(b);
    series_a = a.out_dir;
    series_b = b.out_dir;
  }
  const Grid g = cfg.grid();
  StateSeries sa = load_series(g, series_a, dt_between);
  StateSeries sb = load_series(g, series_b, dt_between);
  VelocityCutoff cutoff{cfg.cutoff_eps_effective()};
  TruncationData d = truncation_input_from_series(g, cfg.law, cutoff, sa, sb, g.nx / 4, g.ny / 4,
                                                  g.nx / 2, g.ny / 2);
  LevelSetReport rep = levelset_decay(d.in, cfg.law.q, K);
  rep.divfree_residual = divform_residual(d.in.u_x, d.in.u_y, d.gxx, d.gxy, d.gyx, d.gyy);

  const std::string path = (fs::path(cfg.out_dir) / "levelsets.csv").string();
  std::FILE* f = std::fopen(path.c_str(), "w");
  std::fprintf(f, "k,lambda_k,measure,ratio\n");
  bool nested = true;
  for (std::size_t k = 0; k < rep.measure.size(); ++k) {
    const double ratio = k < rep.ratio.size() ? rep.ratio[k] : 0.0;
    std::fprintf(f, "%zu,%.17g,%.17g,%.17g\n", k, rep.lambda[k], rep.measure[k], ratio);
    say("  k=%zu lambda=%-12.5g |O_k|=%-12.5g ratio=%.4g\n", k, rep.lambda[k], rep.measure[k], ratio);
    if (k > 0 && rep.measure[k] > rep.measure[k - 1]) nested = false;
  }
  std::fclose(f);
  std::printf("lab_nested=%d lab_divfree_residual=%.17g lab_resolution_exhausted=%d csv=%s\n",
              nested ? 1 : 0, rep.divfree_residual, rep.resolution_exhausted ? 1 : 0, path.c_str());
  return nested ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"2D diffuse-interface solver for two partly miscible power-law fluids"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  std::string config_path, out_dir, mode;
  long seed = -1;
  app.add_option("--config", config_path, "configuration file");
  app.add_option("--out", out_dir, "output directory override");
  app.add_option("--seed", seed, "RNG seed override");
  app.add_option("--mode", mode, "coupling mode override: lagged|fixed_point");
  app.add_flag("--quiet", g_quiet, "suppress the human-readable tables");

  auto* run = app.add_subcommand("run", "run a simulation from the config");
  auto* verify = app.add_subcommand("verify", "run the property suite");
  auto* sweep = app.add_subcommand("sweep-eps", "mollification refinement study");
  std::vector<double> eps_list;
  sweep->add_option("--eps", eps_list, "mollification radii (non-increasing, >= 3 values)");
  auto* lab = app.add_subcommand("truncation-lab", "level-set decay on snapshot series");
  std::string series_a, series_b;
  int lab_K = 5;
  lab->add_option("--series-a", series_a, "snapshot directory of the first run");
  lab->add_option("--series-b", series_b, "snapshot directory of the second run");
  lab->add_option("--levels", lab_K, "number of threshold levels");

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg = load_config(config_path, out_dir, seed, mode);
    if (run->parsed()) return cmd_run(cfg);
    if (verify->parsed()) return cmd_verify(cfg);
    if (sweep->parsed()) return cmd_sweep(cfg, eps_list);
    if (lab->parsed()) return cmd_lab(cfg, series_a, series_b, lab_K);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
