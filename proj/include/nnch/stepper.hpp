// One time step of the full approximate system and the running energy
// ledger of its exact-identity bookkeeping:
//   kinetic + E_mix + sum dt*int S:Dv + sum dt*int m|grad mu|^2 = E0.
// Lagged mode does one CH step with Psi_eps v_old, then one momentum step
// with the fresh (c, mu). Fixed-point mode iterates the CH->momentum map
// within the step, mirroring the construction whose fixed point the
// existence proof extracts.
#pragma once

#include <cstdio>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nnch/cahn_hilliard.hpp"
#include "nnch/constitutive.hpp"
#include "nnch/field.hpp"
#include "nnch/helmholtz.hpp"
#include "nnch/momentum.hpp"
#include "nnch/operators.hpp"

namespace nnch {

struct LedgerRow {
  double t = 0, kinetic = 0, e_mix = 0, cum_visc = 0, cum_mu = 0, residual = 0, mass = 0, div_res = 0;
};

struct EnergyLedger {
  double E0 = 0.0;
  std::vector<LedgerRow> rows;

  void append(LedgerRow r) {
    r.residual = std::abs(r.kinetic + r.e_mix + r.cum_visc + r.cum_mu - E0);
    rows.push_back(r);
  }
  static const char* csv_header() { return "t,kinetic,e_mix,cum_visc,cum_mu,residual,mass,div_res"; }
  void write_csv(std::FILE* f) const {
    std::fprintf(f, "%s\n", csv_header());
    for (const LedgerRow& r : rows)
      std::fprintf(f, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.t, r.kinetic, r.e_mix,
                   r.cum_visc, r.cum_mu, r.residual, r.mass, r.div_res);
  }
};

struct SimState {
  double t = 0.0;
  long step = 0;
  ScalarField c, mu, p;
  VectorField v;
};

enum class CouplingMode { lagged, fixed_point };
enum class CapillaryForm { mu_grad_c, tensor_div };

struct CoupledParams {
  CHStepParams ch;
  MomentumStepParams momentum;
  CouplingMode mode = CouplingMode::lagged;
  CapillaryForm capillary = CapillaryForm::mu_grad_c;
  double fp_tol = 1e-9;
  int fp_max = 20;
  int max_halvings = 5;
};

class CoupledStepper {
 public:
  CoupledStepper(const Grid& g, FreeEnergy energy, ConstitutiveLaw law, CoupledParams params,
                 MollifierKernel kernel, VelocityCutoff cutoff)
      : grid_(g), params_(params), proj_(g),
        psi_(g, std::move(kernel), proj_),
        ch_(g, energy, params.ch),
        mom_(g, law, params.momentum, cutoff, proj_),
        energy_(energy) {}

  const Grid& grid() const { return grid_; }
  const HelmholtzProjector& projector() const { return proj_; }
  const SmoothingOperator& psi() const { return psi_; }
  EnergyLedger& ledger() { return ledger_; }
  const EnergyLedger& ledger() const { return ledger_; }
  const CoupledParams& params() const { return params_; }

  /// Start the ledger from the initial data: E0 = kinetic(v0) + E_mix(c0).
  void init_ledger(const SimState& s) {
    ledger_.rows.clear();
    cum_visc_ = cum_mu_ = 0.0;
    ledger_.E0 = kinetic_energy(grid_, s.v) + mixing_energy(grid_, s.c, energy(), width());
    push_row(s);
  }

  /// One step at the given dt; throws StepRejected on inner failure.
  void step(SimState& s, double dt) {
    switch (params_.mode) {
      case CouplingMode::lagged: step_lagged(s, dt); break;
      case CouplingMode::fixed_point: step_fixed_point(s, dt); break;
    }
  }

  /// Step with the halve-dt retry policy (plumbing, not physics): on
  /// rejection the step is retried at dt/2, up to max_halvings.
  /// Returns the dt actually advanced.
  double advance(SimState& s, double dt) {
    for (int h = 0; ; ++h) {
      try {
        step(s, dt);
        return dt;
      } catch (const StepRejected& e) {
        if (h >= params_.max_halvings)
          throw StepRejected(std::string("step rejected after max dt halvings: ") + e.what());
        dt *= 0.5;
      }
    }
  }

  const FreeEnergy& energy() const { return energy_; }

 private:
  double width() const { return params_.ch.interface_width; }

  VectorField capillary(const ScalarField& c_flux, const ScalarField& c_new, const ScalarField& mu) const {
    if (params_.capillary == CapillaryForm::mu_grad_c)
      return capillary_force_mu(grid_, c_flux, mu, psi_.kernel(), proj_);
    return capillary_force(grid_, c_new, psi_.kernel(), proj_);
  }

  void step_lagged(SimState& s, double dt) {
    VectorField u_tilde = psi_.apply(s.v);
    CHStepResult chs = ch_.step_with_transport(s.c, u_tilde, dt);
    VectorField f = capillary(s.c, chs.c, chs.mu);
    MomentumStepResult ms = mom_.step(s.v, s.p, chs.c, f, dt);
    commit(s, dt, chs, ms);
  }

  void step_fixed_point(SimState& s, double dt) {
    VectorField u = s.v;
    std::optional<CHStepResult> chs;
    std::optional<MomentumStepResult> ms;
    const double denom = std::max(l2_norm(grid_, s.v), 1.0);
    for (int j = 0; j < params_.fp_max; ++j) {
      VectorField u_tilde = psi_.apply(u);
      chs = ch_.step_with_transport(s.c, u_tilde, dt);
      VectorField f = capillary(s.c, chs->c, chs->mu);
      ms = mom_.step(s.v, s.p, chs->c, f, dt, &u);
      VectorField diff = ms->v;
      axpy(-1.0, u, diff);
      const double d = l2_norm(grid_, diff) / denom;
      u = ms->v;
      if (d <= params_.fp_tol) break;
    }
    commit(s, dt, *chs, *ms);
  }

  void commit(SimState& s, double dt, const CHStepResult& chs, const MomentumStepResult& ms) {
    VectorField gmu = gradient_faces(grid_, chs.mu);
    cum_mu_ += dt * params_.ch.m * inner(grid_, gmu, gmu);
    cum_visc_ += dt * ms.visc_dissipation;
    s.c = chs.c;
    s.mu = chs.mu;
    s.v = ms.v;
    s.p = ms.p;
    s.t += dt;
    s.step += 1;
    push_row(s);
  }

  void push_row(const SimState& s) {
    LedgerRow r;
    r.t = s.t;
    r.kinetic = kinetic_energy(grid_, s.v);
    r.e_mix = mixing_energy(grid_, s.c, energy(), width());
    r.cum_visc = cum_visc_;
    r.cum_mu = cum_mu_;
    r.mass = field_sum(s.c) * grid_.cell_area();
    r.div_res = linf_norm(divergence(grid_, s.v));
    ledger_.append(r);
  }

  Grid grid_;
  CoupledParams params_;
  HelmholtzProjector proj_;
  SmoothingOperator psi_;
  CahnHilliardStepper ch_;
  MomentumStepper mom_;
  EnergyLedger ledger_;
  FreeEnergy energy_;
  double cum_visc_ = 0.0, cum_mu_ = 0.0;
};

}  // namespace nnch
