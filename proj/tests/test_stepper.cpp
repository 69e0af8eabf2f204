#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "nnch/driver.hpp"
#include "nnch/stepper.hpp"

using namespace nnch;
using Catch::Approx;

namespace {

RunConfig small_spinodal() {
  RunConfig cfg;
  cfg.nx = cfg.ny = 32;
  cfg.lx = cfg.ly = 16.0 * M_PI;
  cfg.bc = BcMode::periodic;
  cfg.law.delta = 1e-3;
  cfg.ch.m = 4.0;
  cfg.momentum.dt = 5e-3;
  cfg.ch.dt = 5e-3;
  cfg.c_mean = 0.05;  // off-critical so relative mass drift is well posed
  cfg.c_amp = 0.1;
  cfg.t_end = 0.25;
  cfg.rng_seed = 11;
  return cfg;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("rest state: unchanged fields and zero identity residual") {
  RunConfig cfg;
  cfg.nx = cfg.ny = 16;
  cfg.init = InitKind::smooth;
  cfg.c_amp = 0.0;
  cfg.c_mean = 0.25;
  CoupledStepper st = make_stepper(cfg);
  SimState s = initial_state(cfg);
  st.init_ledger(s);
  st.step(s, 1e-2);
  for (double x : s.c.a) REQUIRE(x == Approx(0.25).margin(1e-13));
  REQUIRE(l2_norm(cfg.grid(), s.v) == 0.0);
  REQUIRE(st.ledger().rows.back().residual < 1e-13);
}

TEST_CASE("coupled spinodal run: ledger invariants hold") {
  RunConfig cfg = small_spinodal();
  CoupledStepper st = make_stepper(cfg);
  SimState s = initial_state(cfg);
  st.init_ledger(s);
  const double mass0 = st.ledger().rows.front().mass;
  const double E0 = st.ledger().E0;
  double prev_visc = 0.0, prev_mu = 0.0;
  for (int n = 0; n < 50; ++n) {
    st.step(s, cfg.momentum.dt);
    const LedgerRow& r = st.ledger().rows.back();
    REQUIRE(std::abs(r.mass - mass0) <= 1e-12 * std::abs(mass0));
    REQUIRE(r.div_res <= 1e-10);
    REQUIRE(r.cum_visc >= prev_visc);
    REQUIRE(r.cum_mu >= prev_mu);
    REQUIRE(r.kinetic + r.e_mix <= E0 + r.residual + 1e-12);
    prev_visc = r.cum_visc;
    prev_mu = r.cum_mu;
  }
  REQUIRE(st.ledger().rows.back().residual / E0 < 1e-2);
  // flow actually developed from the capillary forcing
  REQUIRE(st.ledger().rows.back().kinetic > 0.0);
}

TEST_CASE("fixed-point and lagged modes agree to second order in dt") {
  RunConfig base = small_spinodal();
  base.init = InitKind::droplet;
  base.c_amp = 0.9;
  base.v_amp = 0.4;
  base.lx = base.ly = 2.0 * M_PI;
  base.fp_tol = 1e-12;
  base.fp_max = 40;

  std::vector<double> diffs;
  for (double dt : {4e-3, 2e-3, 1e-3}) {
    SimState lag, fp;
    {
      RunConfig cfg = base;
      cfg.coupling_mode = CouplingMode::lagged;
      CoupledStepper st = make_stepper(cfg);
      lag = initial_state(cfg);
      st.init_ledger(lag);
      st.step(lag, dt);
    }
    {
      RunConfig cfg = base;
      cfg.coupling_mode = CouplingMode::fixed_point;
      CoupledStepper st = make_stepper(cfg);
      fp = initial_state(cfg);
      st.init_ledger(fp);
      st.step(fp, dt);
    }
    VectorField dv = lag.v;
    axpy(-1.0, fp.v, dv);
    ScalarField dc = lag.c;
    axpy(-1.0, fp.c, dc);
    diffs.push_back(l2_norm(base.grid(), dv) + l2_norm(base.grid(), dc));
  }
  CAPTURE(diffs);
  REQUIRE(diffs[0] / diffs[1] >= 3.4);  // O(dt^2): ratio ~4
  REQUIRE(diffs[1] / diffs[2] >= 3.4);
}

TEST_CASE("advance: halving retry recovers from a rejected step") {
  RunConfig cfg = small_spinodal();
  cfg.ch.max_picard = 40;
  cfg.ch.tol = 1e-11;
  CoupledStepper st = make_stepper(cfg);
  SimState s = initial_state(cfg);
  st.init_ledger(s);
  // dt far above the Picard contraction bound: rejected, then succeeds halved
  const double dt_big = 2.0;
  const double dt_used = st.advance(s, dt_big);
  REQUIRE(dt_used < dt_big);
  REQUIRE(s.t == Approx(dt_used));

  // a stepper whose inner solve can never converge exhausts its halvings
  RunConfig bad = small_spinodal();
  bad.ch.max_picard = 1;
  bad.ch.tol = 1e-16;
  CoupledStepper st2 = make_stepper(bad);
  SimState s2 = initial_state(bad);
  st2.init_ledger(s2);
  REQUIRE_THROWS_WITH(st2.advance(s2, 1e-3), Catch::Matchers::ContainsSubstring("max dt halvings"));
}

TEST_CASE("run_simulation: T=0 echoes the initial state, determinism at the byte level") {
  namespace fs = std::filesystem;
  RunConfig cfg = small_spinodal();
  cfg.nx = cfg.ny = 16;
  cfg.t_end = 0.0;
  cfg.out_dir = "/tmp/nnch_t0";
  fs::remove_all(cfg.out_dir);
  RunArtifacts art = run_simulation(cfg);
  REQUIRE(art.final_state.step == 0);
  std::string ledger = slurp(art.ledger_path);
  REQUIRE(ledger.find("t,kinetic,e_mix,cum_visc,cum_mu,residual,mass,div_res") == 0);
  REQUIRE(std::count(ledger.begin(), ledger.end(), '\n') == 2);  // header + one row

  cfg.t_end = 0.025;
  cfg.out_dir = "/tmp/nnch_det_a";
  fs::remove_all(cfg.out_dir);
  RunArtifacts a = run_simulation(cfg);
  cfg.out_dir = "/tmp/nnch_det_b";
  fs::remove_all(cfg.out_dir);
  RunArtifacts b = run_simulation(cfg);
  REQUIRE(slurp(a.ledger_path) == slurp(b.ledger_path));
  REQUIRE(!slurp(a.ledger_path).empty());
}

TEST_CASE("paired runs: shear-thinning vs Newtonian, same seed, same invariants") {
  for (double q : {1.5, 2.0}) {
    RunConfig cfg = small_spinodal();
    cfg.law.q = q;
    cfg.t_end = 0.15;
    cfg.out_dir = q == 1.5 ? "/tmp/nnch_pair_thin" : "/tmp/nnch_pair_newton";
    std::filesystem::remove_all(cfg.out_dir);
    RunArtifacts art = run_simulation(cfg);
    const EnergyLedger probe = [&] {
      CoupledStepper st = make_stepper(cfg);
      SimState s = initial_state(cfg);
      st.init_ledger(s);
      return st.ledger();
    }();
    std::ifstream in(art.ledger_path);
    std::string line;
    std::getline(in, line);  // header
    double mass0 = 0.0;
    bool first = true;
    while (std::getline(in, line)) {
      double t, kin, emix, cv, cm, res, mass, div;
      REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf,%lf,%lf", &t, &kin, &emix, &cv, &cm,
                          &res, &mass, &div) == 8);
      if (first) { mass0 = mass; first = false; }
      REQUIRE(std::abs(mass - mass0) <= 1e-12 * std::abs(mass0));
      REQUIRE(div <= 1e-10);
      REQUIRE(kin + emix <= probe.E0 + res + 1e-12);
      REQUIRE(cv >= -1e-15);
      REQUIRE(cm >= -1e-15);
    }
    REQUIRE(std::filesystem::exists(art.snapshot_paths.front()));  // archived
  }
}

TEST_CASE("eps study: equal entries give zero distances, sweeps decrease") {
  RunConfig cfg = small_spinodal();
  cfg.nx = cfg.ny = 24;
  cfg.init = InitKind::smooth;
  cfg.c_amp = 0.3;
  cfg.v_amp = 0.5;
  cfg.lx = cfg.ly = 2.0 * M_PI;
  cfg.momentum.dt = 2e-3;
  cfg.ch.dt = 2e-3;
  cfg.ch.m = 1.0;
  cfg.t_end = 0.02;

  const double h = cfg.lx / cfg.nx;
  EpsStudyReport eq = eps_convergence_study(cfg, {2.0 * h, 2.0 * h, 2.0 * h});
  REQUIRE(eq.complete);
  for (double d : eq.dist_v) REQUIRE(d == 0.0);
  for (double d : eq.dist_c) REQUIRE(d == 0.0);

  EpsStudyReport rep = eps_convergence_study(cfg, {8.0 * h, 4.0 * h, 2.0 * h});
  CAPTURE(rep.dist_v, rep.dist_c, rep.psi_err_v0);
  REQUIRE(rep.complete);
  REQUIRE(rep.v_decreasing);
  REQUIRE(rep.c_decreasing);
  REQUIRE(rep.psi_decreasing);

  REQUIRE_THROWS_AS(eps_convergence_study(cfg, {2.0 * h}), std::invalid_argument);
  REQUIRE_THROWS_AS(eps_convergence_study(cfg, {h, 2.0 * h, 4.0 * h}), std::invalid_argument);
}
