#pragma once

// Flat `key = value` run configuration. '#' starts a comment; unknown keys,
// duplicate keys and malformed values are errors reported with their line.

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "acflow/errors.hpp"
#include "acflow/grid.hpp"
#include "acflow/nonlinearity.hpp"
#include "acflow/schedules.hpp"
#include "acflow/stepper.hpp"

namespace acflow {

enum class ForcingChoice { None, Rotational2d, Manufactured };

inline std::string to_string(ForcingChoice f) {
  switch (f) {
    case ForcingChoice::None: return "none";
    case ForcingChoice::Rotational2d: return "rotational2d";
    case ForcingChoice::Manufactured: return "manufactured";
  }
  return "?";
}

struct AcousticConfig {
  double eps0 = 0.1;       // eps(0)
  double eps_rate = 0.0;   // eps(t) = eps0 (1 + eps_rate t)
  int mode = 1;            // initial standing-wave mode
  double k = 0.01;
  double t_final = 1.0;
};

struct ValidateConfig {
  int steps = 200;
  double beta = 1.0;
  bool doubling = false;  // replace the schedule by k_{n+1} = 2 k_n
};

struct RunConfig {
  int nx = 32, ny = 32;
  double lx = 1.0, ly = 1.0;
  Boundary bc = Boundary::NoSlip;
  Scheme scheme = Scheme::New;
  NonlinearityForm form = NonlinearityForm::Skew;
  double nu = 1.0;
  double t_final = 1.0;
  ScheduleKind schedule = ConstantSchedule{};
  SolverParams solver;
  ForcingChoice forcing = ForcingChoice::None;
  std::string manufactured = "divfree_alt";
  bool continuity_source = false;
  int snapshot_every = 0;  // 0: final state only
  bool stokes_init = false;  // start from the stationary Stokes state of the t = 0 forcing
  std::vector<double> k_list;
  AcousticConfig acoustic;
  ValidateConfig validate;

  GridSpec grid() const { return GridSpec(nx, ny, lx, ly, bc); }
};

namespace detail {

inline const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys{
      "grid.nx", "grid.ny", "grid.n", "grid.lx", "grid.ly", "grid.bc", "scheme", "nonlinearity", "nu", "t_final",
      "schedule.kind", "schedule.k", "schedule.k_base", "schedule.amp", "schedule.freq", "schedule.warmup_steps",
      "schedule.tol_lo", "schedule.tol_hi", "schedule.k0", "schedule.k_min", "schedule.k_max", "schedule.k1",
      "schedule.ramp_time", "solver.picard_tol", "solver.picard_max", "solver.krylov_tol", "solver.krylov_max",
      "solver.linearization", "solver.gmres_restart", "forcing", "init", "manufactured.solution",
      "manufactured.continuity_source", "output.snapshot_every",
      "convergence.k_list", "acoustic.eps0", "acoustic.eps_rate", "acoustic.mode", "acoustic.k", "acoustic.t_final",
      "validate.steps", "validate.beta", "validate.doubling"};
  return keys;
}

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

struct Entry {
  std::string value;
  int line = 0;
};

class EntryReader {
 public:
  EntryReader(std::map<std::string, Entry> entries, std::string source)
      : entries_(std::move(entries)), source_(std::move(source)) {}

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    const auto it = entries_.find(key);
    const std::string where = it == entries_.end() ? source_ : source_ + ":" + std::to_string(it->second.line);
    throw ConfigError(where + ": key '" + key + "': " + what);
  }

  void get(const std::string& key, double& out) const {
    if (!has(key)) return;
    const std::string& v = entries_.at(key).value;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size()) fail(key, "expected a number, got '" + v + "'");
  }

  void get(const std::string& key, int& out) const {
    if (!has(key)) return;
    const std::string& v = entries_.at(key).value;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size()) fail(key, "expected an integer, got '" + v + "'");
  }

  void get(const std::string& key, bool& out) const {
    if (!has(key)) return;
    const std::string& v = entries_.at(key).value;
    if (v == "true" || v == "1") out = true;
    else if (v == "false" || v == "0") out = false;
    else fail(key, "expected true or false, got '" + v + "'");
  }

  void get(const std::string& key, std::string& out) const {
    if (has(key)) out = entries_.at(key).value;
  }

  void get(const std::string& key, std::vector<double>& out) const {
    if (!has(key)) return;
    out.clear();
    std::stringstream ss(entries_.at(key).value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      double x = 0.0;
      const auto r = std::from_chars(item.data(), item.data() + item.size(), x);
      if (r.ec != std::errc() || r.ptr != item.data() + item.size())
        fail(key, "expected a comma-separated list of numbers, bad item '" + item + "'");
      out.push_back(x);
    }
  }

  template <class Enum, class Parse>
  void get_enum(const std::string& key, Enum& out, Parse&& parse) const {
    if (!has(key)) return;
    try {
      out = parse(entries_.at(key).value);
    } catch (const ContractViolation& e) {
      fail(key, e.what());
    }
  }

 private:
  std::map<std::string, Entry> entries_;
  std::string source_;
};

}  // namespace detail

inline RunConfig parse_config(std::istream& is, const std::string& source = "<config>") {
  std::map<std::string, detail::Entry> entries;
  std::string raw;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    const std::string where = source + ":" + std::to_string(line);
    if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key = detail::trim(text.substr(0, eq));
    const std::string value = detail::trim(text.substr(eq + 1));
    if (!detail::known_config_keys().count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
    if (value.empty()) throw ConfigError(where + ": key '" + key + "' has no value");
    if (entries.count(key))
      throw ConfigError(where + ": duplicate key '" + key + "' (first set on line " +
                        std::to_string(entries[key].line) + ")");
    entries[key] = {value, line};
  }

  const detail::EntryReader r(std::move(entries), source);
  RunConfig c;
  if (r.has("grid.n")) {
    if (r.has("grid.nx") || r.has("grid.ny")) r.fail("grid.n", "cannot be combined with grid.nx / grid.ny");
    r.get("grid.n", c.nx);
    c.ny = c.nx;
  }
  r.get("grid.nx", c.nx);
  r.get("grid.ny", c.ny);
  r.get("grid.lx", c.lx);
  r.get("grid.ly", c.ly);
  r.get_enum("grid.bc", c.bc, boundary_from_string);
  r.get_enum("scheme", c.scheme, scheme_from_string);
  r.get_enum("nonlinearity", c.form, nonlinearity_from_string);
  r.get("nu", c.nu);
  r.get("t_final", c.t_final);

  std::string kind = "constant";
  r.get("schedule.kind", kind);
  if (kind == "constant") {
    ConstantSchedule s;
    r.get("schedule.k", s.k);
    c.schedule = s;
  } else if (kind == "oscillating") {
    OscillatingSchedule s;
    r.get("schedule.k_base", s.k_base);
    r.get("schedule.amp", s.amp);
    r.get("schedule.freq", s.freq);
    r.get("schedule.warmup_steps", s.warmup_steps);
    c.schedule = s;
  } else if (kind == "adaptive_div") {
    AdaptiveDivSchedule s;
    r.get("schedule.tol_lo", s.tol_lo);
    r.get("schedule.tol_hi", s.tol_hi);
    r.get("schedule.k0", s.k0);
    r.get("schedule.k_min", s.k_min);
    r.get("schedule.k_max", s.k_max);
    c.schedule = s;
  } else if (kind == "smooth_ramp") {
    SmoothRampSchedule s;
    r.get("schedule.k0", s.k0);
    r.get("schedule.k1", s.k1);
    r.get("schedule.ramp_time", s.ramp_time);
    c.schedule = s;
  } else {
    r.fail("schedule.kind", "unknown schedule '" + kind + "'");
  }

  r.get("solver.picard_tol", c.solver.picard_tol);
  r.get("solver.picard_max", c.solver.picard_max);
  r.get("solver.krylov_tol", c.solver.krylov_tol);
  r.get("solver.krylov_max", c.solver.krylov_max);
  r.get_enum("solver.linearization", c.solver.linearization, linearization_from_string);
  r.get("solver.gmres_restart", c.solver.gmres_restart);

  std::string forcing = "none";
  r.get("forcing", forcing);
  if (forcing == "none") c.forcing = ForcingChoice::None;
  else if (forcing == "rotational2d") c.forcing = ForcingChoice::Rotational2d;
  else if (forcing == "manufactured") c.forcing = ForcingChoice::Manufactured;
  else r.fail("forcing", "expected none, rotational2d or manufactured, got '" + forcing + "'");
  std::string init = "rest";
  r.get("init", init);
  if (init == "stokes") c.stokes_init = true;
  else if (init != "rest") r.fail("init", "expected rest or stokes, got '" + init + "'");
  r.get("manufactured.solution", c.manufactured);
  if (c.manufactured != "printed" && c.manufactured != "divfree_alt" && c.manufactured != "zero")
    r.fail("manufactured.solution", "expected printed, divfree_alt or zero");
  r.get("manufactured.continuity_source", c.continuity_source);
  r.get("output.snapshot_every", c.snapshot_every);
  r.get("convergence.k_list", c.k_list);

  r.get("acoustic.eps0", c.acoustic.eps0);
  r.get("acoustic.eps_rate", c.acoustic.eps_rate);
  r.get("acoustic.mode", c.acoustic.mode);
  r.get("acoustic.k", c.acoustic.k);
  r.get("acoustic.t_final", c.acoustic.t_final);
  r.get("validate.steps", c.validate.steps);
  r.get("validate.beta", c.validate.beta);
  r.get("validate.doubling", c.validate.doubling);

  // Semantic checks, reported against the offending key.
  try {
    (void)c.grid();
  } catch (const ContractViolation& e) {
    r.fail("grid.nx", e.what());
  }
  if (!(c.nu > 0.0)) r.fail("nu", "must be positive");
  if (!(c.t_final > 0.0)) r.fail("t_final", "must be positive");
  try {
    validate(c.schedule);
  } catch (const ContractViolation& e) {
    r.fail("schedule.kind", e.what());
  }
  try {
    c.solver.validate();
  } catch (const ContractViolation& e) {
    r.fail("solver.picard_tol", e.what());
  }
  if (c.snapshot_every < 0) r.fail("output.snapshot_every", "must be >= 0");
  for (double k : c.k_list)
    if (!(k > 0.0)) r.fail("convergence.k_list", "step sizes must be positive");
  if (!(c.acoustic.eps0 > 0.0)) r.fail("acoustic.eps0", "must be positive");
  if (!(c.acoustic.k > 0.0)) r.fail("acoustic.k", "must be positive");
  if (!(c.acoustic.t_final > 0.0)) r.fail("acoustic.t_final", "must be positive");
  if (c.acoustic.mode < 1) r.fail("acoustic.mode", "must be >= 1");
  if (c.validate.steps < 2) r.fail("validate.steps", "must be >= 2");
  if (!(c.validate.beta >= 0.0)) r.fail("validate.beta", "must be non-negative");
  if (c.stokes_init && (c.forcing == ForcingChoice::Manufactured || c.bc == Boundary::Periodic))
    r.fail("init", "stokes initialisation needs a no-slip grid and a non-manufactured forcing");
  if (c.continuity_source && c.forcing != ForcingChoice::Manufactured)
    r.fail("manufactured.continuity_source", "only meaningful with forcing = manufactured");
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open");
  return parse_config(in, path);
}

}  // namespace acflow
