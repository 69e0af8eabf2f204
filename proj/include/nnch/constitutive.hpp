// Stress family S(c, M) and homogeneous free-energy family Phi/phi, with
// executable checks for every clause of the structural assumption the
// solver relies on (growth, Lipschitz dependence on c, coercivity, strict
// monotonicity, and the lower bound on phi').
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace nnch {

struct Mat2 {
  // row-major 2x2
  double a11 = 0, a12 = 0, a21 = 0, a22 = 0;

  static Mat2 sym(const Mat2& m) {
    const double off = 0.5 * (m.a12 + m.a21);
    return {m.a11, off, off, m.a22};
  }
  double frob() const { return std::sqrt(a11 * a11 + a12 * a12 + a21 * a21 + a22 * a22); }
  double ddot(const Mat2& o) const { return a11 * o.a11 + a12 * o.a12 + a21 * o.a21 + a22 * o.a22; }
  Mat2 operator-(const Mat2& o) const { return {a11 - o.a11, a12 - o.a12, a21 - o.a21, a22 - o.a22}; }
  Mat2 operator*(double s) const { return {a11 * s, a12 * s, a21 * s, a22 * s}; }
};

enum class StressKind { power_law, carreau };
enum class PotentialKind { double_well, logarithmic };

struct ConstitutiveLaw {
  double q = 2.0;       // growth exponent, q > 2d/(d+2) = 1 for d = 2
  double nu0 = 1.0;     // consistency nu(c) = nu0 + nu1*c
  double nu1 = 0.0;
  double delta = 1e-8;  // shear regularization at M = 0 (q < 2)
  StressKind kind = StressKind::power_law;
  double c_min = -1.0, c_max = 1.0;  // admissible concentration range

  void validate() const {
    if (!(q > 1.0)) throw std::invalid_argument("ConstitutiveLaw: q must exceed 2d/(d+2) = 1 for d=2");
    if (!(nu0 > 0.0)) throw std::invalid_argument("ConstitutiveLaw: nu0 must be positive");
    if (!(nu0 + nu1 * c_min > 0.0) || !(nu0 + nu1 * c_max > 0.0))
      throw std::invalid_argument("ConstitutiveLaw: nu(c) must stay positive on [a,b]");
    if (delta < 0.0) throw std::invalid_argument("ConstitutiveLaw: delta must be >= 0");
  }

  double nu(double c) const { return nu0 + nu1 * c; }
  double nu_min() const { return std::min(nu(c_min), nu(c_max)); }
  double nu_max() const { return std::max(nu(c_min), nu(c_max)); }

  /// nu(c) * (|D|^2 + reg)^{(q-2)/2} with the kind-dependent regularizer.
  double effective_viscosity(double c, double sym_norm_sq) const {
    const double base = kind == StressKind::power_law ? sym_norm_sq + delta * delta : 1.0 + sym_norm_sq;
    return nu(c) * std::pow(base, 0.5 * (q - 2.0));
  }

  // Constants realizing the growth / coercivity clauses for this family.
  // power_law: |S| <= nu_max (|D|^{q-1} + 1) for delta <= 1,
  //            S:M >= nu_min |D|^q - nu_min delta^q.
  // carreau:   |S| <= nu_max max(1, 2^{(q-2)/2}) (|D|^{q-1} + 1),
  //            S:M >= nu_min min(1, 2^{(q-2)/2}) (|D|^q - 1).
  double growth_constant() const {
    const double cq = std::max(1.0, std::pow(2.0, 0.5 * (q - 2.0)));
    return nu_max() * cq;
  }
  double kappa() const {
    return kind == StressKind::power_law ? nu_min() : nu_min() * std::min(1.0, std::pow(2.0, 0.5 * (q - 2.0)));
  }
  double coercivity_offset() const {
    if (kind == StressKind::power_law) return nu_min() * std::pow(delta, q);
    return kappa();
  }
  double lipschitz_constant() const {
    return std::abs(nu1) * std::max(1.0, std::pow(2.0, 0.5 * (q - 2.0)));
  }
};

/// S(c, M); depends on M only through sym(M), S(c, 0) = 0.
inline Mat2 stress_eval(const ConstitutiveLaw& law, double c, const Mat2& m) {
  if (c < law.c_min - 1e-12 || c > law.c_max + 1e-12)
    throw std::domain_error("stress_eval: concentration outside [a,b]");
  const Mat2 d = Mat2::sym(m);
  const double n2 = d.ddot(d);
  if (law.kind == StressKind::power_law && law.delta == 0.0 && n2 == 0.0) return Mat2{};
  return d * law.effective_viscosity(c, n2);
}

struct FreeEnergy {
  PotentialKind kind = PotentialKind::double_well;
  double a = -1.0, b = 1.0;
  double theta = 1.0, theta_c = 2.0;  // logarithmic only
  double clip_margin = 1e-6;

  void validate() const {
    if (!(a < b)) throw std::invalid_argument("FreeEnergy: need a < b");
    if (kind == PotentialKind::logarithmic) {
      if (!(theta > 0.0)) throw std::invalid_argument("FreeEnergy: theta must be positive");
      if (!(clip_margin > 0.0 && clip_margin < 0.5 * (b - a)))
        throw std::invalid_argument("FreeEnergy: clip_margin out of range");
    }
  }

  /// Lower bound alpha with phi'(s) >= -alpha on (a,b).
  double alpha() const { return kind == PotentialKind::double_well ? 1.0 : std::max(theta_c - theta, 0.0); }
};

struct PhiEval {
  double Phi = 0, phi = 0, dphi = 0;
  bool clamped = false;
};

/// (Phi, phi, phi') at c. Logarithmic inputs inside the clip margin are
/// evaluated at the clamp point and flagged.
inline PhiEval phi_eval(const FreeEnergy& e, double c) {
  if (c < e.a - 1e-12 || c > e.b + 1e-12) throw std::domain_error("phi_eval: c outside [a,b]");
  PhiEval r;
  if (e.kind == PotentialKind::double_well) {
    // Phi = (1-c^2)^2 / 4 on [-1,1]
    const double w = 1.0 - c * c;
    r.Phi = 0.25 * w * w;
    r.phi = c * c * c - c;
    r.dphi = 3.0 * c * c - 1.0;
    return r;
  }
  const double lo = e.a + e.clip_margin, hi = e.b - e.clip_margin;
  double s = c;
  if (s < lo) { s = lo; r.clamped = true; }
  if (s > hi) { s = hi; r.clamped = true; }
  // Phi(c) = theta/2 [(1+c)ln(1+c) + (1-c)ln(1-c)] - theta_c c^2 / 2,
  // normalized so Phi(0) = 0 (offset convention).
  const double p = 1.0 + s, m = 1.0 - s;
  r.Phi = 0.5 * e.theta * (p * std::log(p) + m * std::log(m)) - 0.5 * e.theta_c * s * s;
  r.phi = 0.5 * e.theta * std::log(p / m) - e.theta_c * s;
  r.dphi = e.theta / (p * m) - e.theta_c;
  return r;
}

/// Potential evaluation as the time stepper uses it: the double well is a
/// polynomial and extends smoothly to all of R (phi' >= -1 globally), so
/// out-of-range excursions are evaluated raw and only flagged; the
/// logarithmic potential is clamped at the clip margin.
inline PhiEval phi_eval_global(const FreeEnergy& e, double c) {
  if (e.kind == PotentialKind::double_well) {
    PhiEval r;
    const double w = 1.0 - c * c;
    r.Phi = 0.25 * w * w;
    r.phi = c * c * c - c;
    r.dphi = 3.0 * c * c - 1.0;
    r.clamped = c < e.a || c > e.b;
    return r;
  }
  const double lo = e.a + e.clip_margin, hi = e.b - e.clip_margin;
  return phi_eval(e, std::clamp(c, lo, hi));
}

// --- executable Assumption-1 check -------------------------------------------

struct AssumptionReport {
  std::vector<std::string> violations;
  double max_growth_ratio = 0.0;    // sup |S| / (C (|D|^{q-1} + 1))
  double max_lipschitz_ratio = 0.0; // sup |S(c1)-S(c2)| / (C |c1-c2| (|D|^{q-1}+1))
  double min_monotone_gap = std::numeric_limits<double>::infinity();  // normalized by |sym dM|^2
  double min_coercivity_gap = std::numeric_limits<double>::infinity();// S:M - (kappa |D|^q - C1)
  double min_dphi = std::numeric_limits<double>::infinity();
  bool ok() const { return violations.empty(); }
};

/// Seeded sampling check of every Assumption-1 clause plus the phi' bound.
/// Violations are reported in the result, never thrown.
inline AssumptionReport check_assumption_1(const ConstitutiveLaw& law, const FreeEnergy& energy,
                                           int n_samples, std::uint64_t rng_seed) {
  if (n_samples < 1) throw std::invalid_argument("check_assumption_1: n_samples must be >= 1");
  AssumptionReport rep;
  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> um(-3.0, 3.0);
  std::uniform_real_distribution<double> uc(law.c_min, law.c_max);
  const double C = law.growth_constant();
  const double Cl = law.lipschitz_constant();
  const double kap = law.kappa(), C1 = law.coercivity_offset();

  auto rand_mat = [&] { return Mat2{um(rng), um(rng), um(rng), um(rng)}; };
  int reported = 0;
  auto flag = [&](const std::string& s) {
    if (reported < 16) rep.violations.push_back(s);
    ++reported;
  };

  for (int k = 0; k < n_samples; ++k) {
    const double c = uc(rng), c1 = uc(rng), c2 = uc(rng);
    const Mat2 M = rand_mat(), M1 = rand_mat(), M2 = rand_mat();
    const Mat2 D = Mat2::sym(M);
    const double nd = D.frob();
    const Mat2 S = stress_eval(law, c, M);

    const double growth_env = C * (std::pow(nd, law.q - 1.0) + 1.0);
    rep.max_growth_ratio = std::max(rep.max_growth_ratio, S.frob() / growth_env);
    if (S.frob() > growth_env * (1.0 + 1e-12)) flag("growth bound violated at sample " + std::to_string(k));

    if (std::abs(c1 - c2) > 1e-14) {
      const double dS = (stress_eval(law, c1, M) - stress_eval(law, c2, M)).frob();
      const double env = Cl * std::abs(c1 - c2) * (std::pow(nd, law.q - 1.0) + 1.0);
      if (env > 0.0) {
        rep.max_lipschitz_ratio = std::max(rep.max_lipschitz_ratio, dS / env);
        if (dS > env * (1.0 + 1e-12)) flag("c-Lipschitz bound violated at sample " + std::to_string(k));
      }
    }

    const double coer = S.ddot(M) - (kap * std::pow(nd, law.q) - C1);
    rep.min_coercivity_gap = std::min(rep.min_coercivity_gap, coer);
    if (coer < -1e-12 * (1.0 + std::abs(S.ddot(M)))) flag("coercivity violated at sample " + std::to_string(k));

    const Mat2 dsym = Mat2::sym(M1) - Mat2::sym(M2);
    const double dn2 = dsym.ddot(dsym);
    if (dn2 > 1e-28) {  // equal symmetric parts are excluded from strictness
      const double gap = (stress_eval(law, c, M1) - stress_eval(law, c, M2)).ddot(M1 - M2) / dn2;
      rep.min_monotone_gap = std::min(rep.min_monotone_gap, gap);
      if (gap <= 1e-14 * law.nu_min()) flag("strict monotonicity violated at sample " + std::to_string(k));
    }

    // phi' >= -alpha on (a,b)
    std::uniform_real_distribution<double> us(energy.a + energy.clip_margin, energy.b - energy.clip_margin);
    const double s = us(rng);
    const double dphi = phi_eval(energy, s).dphi;
    rep.min_dphi = std::min(rep.min_dphi, dphi);
    if (dphi < -energy.alpha() - 1e-12) flag("phi' lower bound violated at sample " + std::to_string(k));
  }
  if (reported > 16)
    rep.violations.push_back("... and " + std::to_string(reported - 16) + " more");
  return rep;
}

}  // namespace nnch
