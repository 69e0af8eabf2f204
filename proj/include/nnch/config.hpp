// Run configuration: plain [section] key = value text files, every module
// precondition validated up front, unknown sections/keys rejected, all
// violations collected and reported together.
#pragma once

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nnch/constitutive.hpp"
#include "nnch/field.hpp"
#include "nnch/stepper.hpp"

namespace nnch {

struct ConfigError : std::runtime_error {
  std::vector<std::string> violations;
  explicit ConfigError(std::vector<std::string> v)
      : std::runtime_error(join(v)), violations(std::move(v)) {}
  static std::string join(const std::vector<std::string>& v) {
    std::string s = "invalid configuration:";
    for (const auto& e : v) s += "\n  - " + e;
    return s;
  }
};

enum class InitKind { spinodal, smooth, droplet, stratified };

struct RunConfig {
  // [domain]
  int nx = 64, ny = 64;
  double lx = 6.283185307179586, ly = 6.283185307179586;
  BcMode bc = BcMode::periodic;
  // [fluid]
  ConstitutiveLaw law;
  // [potential]
  FreeEnergy potential;
  // [ch]
  CHStepParams ch;
  // [momentum]
  MomentumStepParams momentum;
  // [approx]
  double mollify_eps = -1.0;  // < 0: default 2*hx at build time
  double cutoff_eps = -1.0;   // < 0: tied to mollify_eps
  CouplingMode coupling_mode = CouplingMode::lagged;
  CapillaryForm capillary_form = CapillaryForm::mu_grad_c;
  double fp_tol = 1e-9;
  int fp_max = 20;
  // [time]
  double t_end = 0.1;
  int snapshot_every = 0;  // steps between snapshots; 0 = only first/last
  // [init]
  InitKind init = InitKind::spinodal;
  double c_mean = 0.0, c_amp = 0.01, v_amp = 0.0;
  // [output]
  std::string out_dir = "out";
  bool write_bin = true, write_csv = false;
  // [seed]
  std::uint64_t rng_seed = 1;

  Grid grid() const { return Grid(nx, ny, lx, ly, bc); }
  double mollify_eps_effective() const { return mollify_eps >= 0.0 ? mollify_eps : 2.0 * lx / nx; }
  double cutoff_eps_effective() const { return cutoff_eps >= 0.0 ? cutoff_eps : mollify_eps_effective(); }
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  std::size_t b = s.find_last_not_of(" \t\r");
  return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

struct KeyValue {
  std::string value;
  int line = 0;
  bool used = false;
};

using Sections = std::map<std::string, std::map<std::string, KeyValue>>;

inline Sections read_sections(std::istream& in, std::vector<std::string>& errs) {
  Sections sec;
  std::string line, cur;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        errs.push_back("line " + std::to_string(n) + ": malformed section header '" + line + "'");
        continue;
      }
      cur = trim(line.substr(1, line.size() - 2));
      sec[cur];
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      errs.push_back("line " + std::to_string(n) + ": expected 'key = value', got '" + line + "'");
      continue;
    }
    if (cur.empty()) {
      errs.push_back("line " + std::to_string(n) + ": key outside any [section]");
      continue;
    }
    sec[cur][trim(line.substr(0, eq))] = KeyValue{trim(line.substr(eq + 1)), n, false};
  }
  return sec;
}

struct Reader {
  Sections& sec;
  std::vector<std::string>& errs;

  KeyValue* find(const std::string& s, const std::string& k) {
    auto si = sec.find(s);
    if (si == sec.end()) return nullptr;
    auto ki = si->second.find(k);
    if (ki == si->second.end()) return nullptr;
    ki->second.used = true;
    return &ki->second;
  }
  void number(const std::string& s, const std::string& k, double& out) {
    if (KeyValue* kv = find(s, k)) {
      try {
        std::size_t pos = 0;
        out = std::stod(kv->value, &pos);
        if (pos != kv->value.size()) throw std::invalid_argument("");
      } catch (...) {
        errs.push_back("line " + std::to_string(kv->line) + ": [" + s + "] " + k +
                       " is not a number: '" + kv->value + "'");
      }
    }
  }
  void integer(const std::string& s, const std::string& k, int& out) {
    double d = out;
    if (KeyValue* kv = find(s, k)) {
      try {
        std::size_t pos = 0;
        d = std::stod(kv->value, &pos);
        if (pos != kv->value.size() || d != double(int(d))) throw std::invalid_argument("");
        out = int(d);
      } catch (...) {
        errs.push_back("line " + std::to_string(kv->line) + ": [" + s + "] " + k +
                       " is not an integer: '" + kv->value + "'");
      }
    }
  }
  void uinteger(const std::string& s, const std::string& k, std::uint64_t& out) {
    if (KeyValue* kv = find(s, k)) {
      try {
        out = std::stoull(kv->value);
      } catch (...) {
        errs.push_back("line " + std::to_string(kv->line) + ": [" + s + "] " + k +
                       " is not an unsigned integer: '" + kv->value + "'");
      }
    }
  }
  void text(const std::string& s, const std::string& k, std::string& out) {
    if (KeyValue* kv = find(s, k)) out = kv->value;
  }
  void flag(const std::string& s, const std::string& k, bool& out) {
    if (KeyValue* kv = find(s, k)) {
      if (kv->value == "true" || kv->value == "1") out = true;
      else if (kv->value == "false" || kv->value == "0") out = false;
      else
        errs.push_back("line " + std::to_string(kv->line) + ": [" + s + "] " + k +
                       " must be true/false: '" + kv->value + "'");
    }
  }
};

}  // namespace detail

/// Parse and validate; throws ConfigError carrying every violation found,
/// not just the first.
inline RunConfig parse_config_stream(std::istream& in) {
  std::vector<std::string> errs;
  detail::Sections sec = detail::read_sections(in, errs);
  detail::Reader rd{sec, errs};
  RunConfig c;

  rd.integer("domain", "nx", c.nx);
  rd.integer("domain", "ny", c.ny);
  rd.number("domain", "lx", c.lx);
  rd.number("domain", "ly", c.ly);
  std::string bc = "periodic";
  rd.text("domain", "bc", bc);
  if (bc == "periodic") c.bc = BcMode::periodic;
  else if (bc == "box_noslip_neumann") c.bc = BcMode::box_noslip_neumann;
  else if (bc == "channel_x") c.bc = BcMode::channel_x;
  else errs.push_back("[domain] bc must be periodic|box_noslip_neumann|channel_x, got '" + bc + "'");

  rd.number("fluid", "q", c.law.q);
  rd.number("fluid", "nu0", c.law.nu0);
  rd.number("fluid", "nu1", c.law.nu1);
  rd.number("fluid", "delta", c.law.delta);
  std::string fk = "power_law";
  rd.text("fluid", "kind", fk);
  if (fk == "power_law") c.law.kind = StressKind::power_law;
  else if (fk == "carreau") c.law.kind = StressKind::carreau;
  else errs.push_back("[fluid] kind must be power_law|carreau, got '" + fk + "'");

  std::string pk = "double_well";
  rd.text("potential", "kind", pk);
  if (pk == "double_well") c.potential.kind = PotentialKind::double_well;
  else if (pk == "logarithmic") c.potential.kind = PotentialKind::logarithmic;
  else errs.push_back("[potential] kind must be double_well|logarithmic, got '" + pk + "'");
  rd.number("potential", "theta", c.potential.theta);
  rd.number("potential", "theta_c", c.potential.theta_c);
  rd.number("potential", "clip_margin", c.potential.clip_margin);

  rd.number("ch", "m", c.ch.m);
  double split = -1.0;
  rd.number("ch", "splitting_const", split);
  rd.number("ch", "tol", c.ch.tol);
  rd.integer("ch", "max_picard", c.ch.max_picard);
  rd.number("ch", "interface_width", c.ch.interface_width);

  rd.number("momentum", "dt", c.momentum.dt);
  rd.number("momentum", "picard_tol", c.momentum.picard_tol);
  rd.number("momentum", "theta_relax", c.momentum.theta_relax);
  rd.integer("momentum", "max_picard", c.momentum.max_picard);
  c.ch.dt = c.momentum.dt;

  rd.number("approx", "mollify_eps", c.mollify_eps);
  rd.number("approx", "cutoff_eps", c.cutoff_eps);
  std::string mode = "lagged";
  rd.text("approx", "coupling_mode", mode);
  if (mode == "lagged") c.coupling_mode = CouplingMode::lagged;
  else if (mode == "fixed_point") c.coupling_mode = CouplingMode::fixed_point;
  else errs.push_back("[approx] coupling_mode must be lagged|fixed_point, got '" + mode + "'");
  std::string capf = "mu_grad_c";
  rd.text("approx", "capillary_form", capf);
  if (capf == "mu_grad_c") c.capillary_form = CapillaryForm::mu_grad_c;
  else if (capf == "tensor_div") c.capillary_form = CapillaryForm::tensor_div;
  else errs.push_back("[approx] capillary_form must be mu_grad_c|tensor_div, got '" + capf + "'");
  rd.number("approx", "fp_tol", c.fp_tol);
  rd.integer("approx", "fp_max", c.fp_max);

  rd.number("time", "t_end", c.t_end);
  rd.integer("time", "snapshot_every", c.snapshot_every);

  std::string ik = "spinodal";
  rd.text("init", "kind", ik);
  if (ik == "spinodal") c.init = InitKind::spinodal;
  else if (ik == "smooth") c.init = InitKind::smooth;
  else if (ik == "droplet") c.init = InitKind::droplet;
  else if (ik == "stratified") c.init = InitKind::stratified;
  else errs.push_back("[init] kind must be spinodal|smooth|droplet|stratified, got '" + ik + "'");
  rd.number("init", "c_mean", c.c_mean);
  rd.number("init", "c_amp", c.c_amp);
  rd.number("init", "v_amp", c.v_amp);

  rd.text("output", "dir", c.out_dir);
  rd.flag("output", "bin", c.write_bin);
  rd.flag("output", "csv", c.write_csv);

  rd.uinteger("seed", "rng_seed", c.rng_seed);

  static const std::map<std::string, bool> known_sections = {
      {"domain", true}, {"fluid", true}, {"potential", true}, {"ch", true}, {"momentum", true},
      {"approx", true}, {"time", true}, {"init", true}, {"output", true}, {"seed", true}};
  for (const auto& [name, keys] : sec) {
    if (!known_sections.count(name)) {
      errs.push_back("unknown section [" + name + "]");
      continue;
    }
    for (const auto& [key, kv] : keys)
      if (!kv.used)
        errs.push_back("line " + std::to_string(kv.line) + ": unknown key '" + key + "' in [" + name + "]");
  }

  // semantic validation: every module precondition, collected
  if (c.nx < 8 || c.ny < 8) errs.push_back("[domain] nx, ny must be >= 8");
  if (!(c.lx > 0) || !(c.ly > 0)) errs.push_back("[domain] lx, ly must be > 0");
  if (!(c.law.q > 1.0)) errs.push_back("[fluid] q must exceed 2d/(d+2) = 1 for d=2");
  if (!(c.law.nu0 > 0.0)) errs.push_back("[fluid] nu0 must be positive");
  if (!(c.law.nu0 + c.law.nu1 * c.law.c_min > 0.0) || !(c.law.nu0 + c.law.nu1 * c.law.c_max > 0.0))
    errs.push_back("[fluid] nu(c) = nu0 + nu1 c must stay positive on [a,b]");
  if (c.law.delta < 0.0) errs.push_back("[fluid] delta must be >= 0");
  if (c.law.q < 2.0 && c.law.delta == 0.0 && c.law.kind == StressKind::power_law)
    errs.push_back("[fluid] power law with q < 2 needs delta > 0");
  if (c.potential.kind == PotentialKind::logarithmic) {
    if (!(c.potential.theta > 0)) errs.push_back("[potential] theta must be positive");
    if (!(c.potential.clip_margin > 0 && c.potential.clip_margin < 1))
      errs.push_back("[potential] clip_margin must be in (0,1)");
  }
  if (!(c.ch.m > 0)) errs.push_back("[ch] m must be > 0");
  if (!(c.ch.interface_width > 0)) errs.push_back("[ch] interface_width must be > 0");
  if (split >= 0.0) c.ch.splitting_const = split;
  else c.ch.splitting_const = c.potential.alpha() / c.ch.interface_width;  // documented default
  if (c.ch.splitting_const < c.potential.alpha() / c.ch.interface_width - 1e-14)
    errs.push_back("[ch] splitting_const must be >= alpha/interface_width");
  if (!(c.ch.tol > 0)) errs.push_back("[ch] tol must be > 0");
  if (!(c.momentum.dt > 0)) errs.push_back("[momentum] dt must be > 0");
  if (!(c.momentum.picard_tol > 0)) errs.push_back("[momentum] picard_tol must be > 0");
  if (!(c.momentum.theta_relax > 0 && c.momentum.theta_relax <= 1))
    errs.push_back("[momentum] theta_relax must be in (0,1]");
  if (!(c.fp_tol > 0) || c.fp_max < 1) errs.push_back("[approx] fp_tol must be > 0 and fp_max >= 1");
  if (!(c.t_end >= 0)) errs.push_back("[time] t_end must be >= 0");
  if (c.snapshot_every < 0) errs.push_back("[time] snapshot_every must be >= 0");
  // noise/cos profiles attain c_mean +- c_amp exactly; tanh profiles stay
  // strictly inside it
  const bool attains = c.init == InitKind::spinodal || c.init == InitKind::smooth;
  const double reach = c.c_mean + std::abs(c.c_amp), low = c.c_mean - std::abs(c.c_amp);
  if (attains ? (reach >= 1.0 || low <= -1.0) : (reach > 1.0 || low < -1.0))
    errs.push_back("[init] c_mean +- c_amp must stay inside (-1,1)");

  if (!errs.empty()) throw ConfigError(std::move(errs));
  return c;
}

inline RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open config file: " + path});
  return parse_config_stream(in);
}

}  // namespace nnch
