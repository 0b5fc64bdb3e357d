#pragma once

// Experiment drivers behind the command-line tool. Each cmd_* writes its
// files into an output directory and returns a process exit code; the
// simulate_* / plan_* functions underneath are usable on their own.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "acflow/acoustic.hpp"
#include "acflow/config.hpp"
#include "acflow/diagnostics.hpp"
#include "acflow/errors.hpp"
#include "acflow/grid.hpp"
#include "acflow/schedules.hpp"
#include "acflow/stepper.hpp"

namespace acflow {

enum ExitCode : int { kExitOk = 0, kExitIo = 1, kExitConfig = 2, kExitSolver = 3, kExitStuck = 4 };

// ---------------------------------------------------------------------------
// Problem setup

struct Problem {
  GridSpec grid;
  Scheme scheme = Scheme::New;
  NonlinearityForm form = NonlinearityForm::Skew;
  double nu = 1.0;
  SolverParams solver;
  std::function<VectorField(double t)> body_force;
  std::optional<ManufacturedSolution> exact;
  bool continuity_source = false;
  VectorField u0;
  ScalarField p0;

  /// Continuity source for the step (t_n, eps_n) -> (t_n + k, eps_np1).
  std::optional<ScalarField> source(double t_np1, double eps_n, double eps_np1, double k) const {
    if (!continuity_source || !exact) return std::nullopt;
    ForcingModel m;
    m.nu = nu;
    m.continuity_source = true;
    m.form = scheme;
    const double e = scheme == Scheme::Standard ? eps_np1 : 0.5 * (eps_n + eps_np1);
    const double et = (eps_np1 - eps_n) / k;
    m.eps = [e](double) { return e; };
    m.eps_t = [et](double) { return et; };
    return sample_source(grid, exact_forcing(*exact, m), t_np1);
  }
};

/// Rotating body force (-4y(1-x^2-y^2), 4x(1-x^2-y^2)) evaluated in
/// coordinates recentred to [-1, 1]^2.
inline VectorField rotational_force(const GridSpec& g) {
  auto X = [&g](double x) { return 2.0 * x / g.lx - 1.0; };
  auto Y = [&g](double y) { return 2.0 * y / g.ly - 1.0; };
  return sample_vector(
      g,
      [&](double x, double y) {
        const double a = X(x), b = Y(y);
        return -4.0 * b * (1.0 - a * a - b * b);
      },
      [&](double x, double y) {
        const double a = X(x), b = Y(y);
        return 4.0 * a * (1.0 - a * a - b * b);
      });
}

inline Problem make_problem(const RunConfig& cfg) {
  Problem pb;
  pb.grid = cfg.grid();
  pb.scheme = cfg.scheme;
  pb.form = cfg.form;
  pb.nu = cfg.nu;
  pb.solver = cfg.solver;
  pb.u0 = VectorField(pb.grid);
  pb.p0 = ScalarField(pb.grid);
  switch (cfg.forcing) {
    case ForcingChoice::None: {
      const GridSpec g = pb.grid;
      pb.body_force = [g](double) { return VectorField(g); };
      break;
    }
    case ForcingChoice::Rotational2d: {
      const VectorField f = rotational_force(pb.grid);
      pb.body_force = [f](double) { return f; };
      break;
    }
    case ForcingChoice::Manufactured: {
      const ManufacturedSolution ms = manufactured_from_string(cfg.manufactured);
      if (!ms.divergence_free && !cfg.continuity_source)
        throw ConfigError("manufactured solution '" + ms.name +
                          "' is not divergence-free; set manufactured.continuity_source = true");
      ForcingModel m;
      m.nu = cfg.nu;
      m.form = cfg.scheme;
      m.continuity_source = cfg.continuity_source;
      if (cfg.continuity_source) {
        m.eps = [](double t) { return 0.01 * (1.0 + t); };
        m.eps_t = [](double) { return 0.01; };
      }
      const Forcing F = exact_forcing(ms, m);
      verify_forcing(ms, m, F);
      const GridSpec g = pb.grid;
      pb.body_force = [g, F](double t) { return sample_forcing(g, F, t); };
      pb.exact = ms;
      pb.continuity_source = cfg.continuity_source;
      pb.u0 = sample_velocity(pb.grid, ms, 0.0);
      pb.p0 = sample_pressure(pb.grid, ms, 0.0);
      break;
    }
  }
  if (cfg.stokes_init) {
    const StokesSolution st = stokes_solve(pb.body_force(0.0), cfg.nu, cfg.solver);
    pb.u0 = st.u;
    pb.p0 = st.p;
  }
  return pb;
}

// ---------------------------------------------------------------------------
// Time stepping

struct FlowState {
  VectorField u;
  ScalarField p;
  std::optional<VectorField> u_prev;
  double t = 0.0;
  double k = 0.0;    // last accepted step
  double eps = 0.0;  // eps_n
  int n = 0;
};

struct StepRecord {
  StepInputs in;
  StepResult res;
  Scheme used = Scheme::New;
};

inline FlowState initial_flow_state(const Problem& pb, double eps0) {
  FlowState s;
  s.u = pb.u0;
  s.p = pb.p0;
  s.eps = eps0;
  return s;
}

/// Trial step of size k with eps_{n+1} = eps_np1. BDF2 runs start with one
/// step of the variable-eps Euler scheme.
inline StepRecord flow_step(const Problem& pb, const FlowState& s, double k, double eps_np1) {
  StepRecord r;
  r.in.u_n = s.u;
  r.in.p_n = s.p;
  r.in.eps_n = s.eps;
  r.in.eps_np1 = eps_np1;
  r.in.k_np1 = k;
  r.in.nu = pb.nu;
  r.in.f_np1 = pb.body_force(s.t + k);
  r.in.g_np1 = pb.source(s.t + k, s.eps, eps_np1, k);
  if (s.u_prev && s.k > 0.0) {
    VectorField guess = s.u;
    const double ratio = k / s.k;
    scale(1.0 + ratio, guess);
    axpy(-ratio, *s.u_prev, guess);
    r.in.guess = std::move(guess);
  }
  r.used = pb.scheme;
  if (pb.scheme == Scheme::Bdf2New) {
    if (s.u_prev) {
      r.in.u_nm1 = s.u_prev;
      r.in.k_n = s.k;
    } else {
      r.used = Scheme::New;
    }
  }
  r.res = advance(r.in, pb.solver, pb.form, r.used);
  return r;
}

inline FlowState commit(const FlowState& s, StepRecord&& r) {
  FlowState out;
  out.u_prev = s.u;
  out.u = std::move(r.res.u_np1);
  out.p = std::move(r.res.p_np1);
  out.t = s.t + r.in.k_np1;
  out.k = r.in.k_np1;
  out.eps = r.in.eps_np1;
  out.n = s.n + 1;
  return out;
}

/// Per-step ledger; empty for BDF2 steps, which carry no one-step energy equality.
inline std::optional<EnergyLedger> step_ledger(const StepRecord& r, int n) {
  switch (r.used) {
    case Scheme::New: return ledger_new(r.in, r.res, n);
    case Scheme::Standard: return ledger_standard(r.in, r.res, n);
    case Scheme::Bdf2New: return std::nullopt;
  }
  return std::nullopt;
}

/// (k, eps) sequence of a state-independent schedule up to t_final. Entry 0
/// is the initial (k_0, eps_0); entry n >= 1 is the step taken from t_{n-1}.
inline std::vector<StepSample> plan_schedule(const ScheduleKind& kind, int order, double t_final) {
  if (std::holds_alternative<AdaptiveDivSchedule>(kind))
    throw ContractViolation("plan_schedule: the adaptive controller depends on the solution");
  ScheduleState st = initial_state(kind, order);
  std::vector<StepSample> plan{{st.k, st.eps}};
  while (t_final - st.t > 1e-9 * t_final) {
    const Proposal p = propose(kind, st, order);
    plan.push_back({p.k, p.eps});
    st = accept(st, p.k, p.eps);
  }
  return plan;
}

/// Fixed number of steps of a state-independent schedule.
inline std::vector<StepSample> plan_steps(const ScheduleKind& kind, int order, int steps) {
  ScheduleState st = initial_state(kind, order);
  std::vector<StepSample> plan{{st.k, st.eps}};
  for (int n = 0; n < steps; ++n) {
    const Proposal p = propose(kind, st, order);
    plan.push_back({p.k, p.eps});
    st = accept(st, p.k, p.eps);
  }
  return plan;
}

using StepObserver = std::function<void(const FlowState& before, const StepRecord&, const FlowState& after,
                                        const std::string& decision)>;

/// Run a precomputed (k, eps) plan.
inline FlowState simulate_plan(const Problem& pb, const std::vector<StepSample>& plan,
                               const StepObserver& observe = {}) {
  require(!plan.empty(), "simulate_plan: empty plan");
  FlowState s = initial_flow_state(pb, plan.front().eps);
  for (std::size_t i = 1; i < plan.size(); ++i) {
    StepRecord r = flow_step(pb, s, plan[i].k, plan[i].eps);
    FlowState next = commit(s, StepRecord(r));
    if (observe) observe(s, r, next, "accept");
    s = std::move(next);
  }
  return s;
}

struct AdaptiveRun {
  FlowState final_state;
  std::vector<StepSample> accepted;  // entry 0 is the initial (k0, eps0)
  int doublings = 0;
  int halvings = 0;
};

/// Halving-and-doubling controller driven by ||div u_h||.
inline AdaptiveRun simulate_adaptive(const Problem& pb, const AdaptiveDivSchedule& sched, double t_final,
                                     const StepObserver& observe = {}) {
  const int order = scheme_order(pb.scheme);
  ScheduleState st = initial_state(ScheduleKind{sched}, order);
  AdaptiveRun run;
  run.accepted.push_back({st.k, st.eps});
  FlowState s = initial_flow_state(pb, st.eps);
  while (t_final - s.t > 1e-9 * t_final) {
    const double k = std::clamp(st.k, sched.k_min, sched.k_max);
    const double eps = eps_for_step(k, order);
    StepRecord r = flow_step(pb, s, k, eps);
    const double div = l2norm(divergence(r.res.u_np1));
    ScheduleState trial = st;
    trial.k = k;
    const AuditOutcome a = audit(sched, div, trial);
    if (a.decision == Decision::RejectAndHalve) {
      ++run.halvings;
      if (observe) observe(s, r, s, to_string(a.decision));
      st.k = a.k_next;
      continue;
    }
    if (a.decision == Decision::AcceptAndDouble) ++run.doublings;
    FlowState next = commit(s, StepRecord(r));
    if (observe) observe(s, r, next, to_string(a.decision));
    s = std::move(next);
    st = accept(st, k, eps);
    st.k = a.k_next;
    run.accepted.push_back({k, eps});
  }
  run.final_state = std::move(s);
  return run;
}

// ---------------------------------------------------------------------------
// Output

inline std::string csv_number(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

/// Streams norms.csv, ledger.csv, schedule.csv and snapshots for a run.
class RunWriter {
 public:
  RunWriter(const std::filesystem::path& dir, const Problem& pb, int snapshot_every)
      : dir_(dir), pb_(pb), every_(snapshot_every) {
    std::filesystem::create_directories(dir_ / "snapshots");
    norms_.open(dir_ / "norms.csv");
    ledger_.open(dir_ / "ledger.csv");
    schedule_.open(dir_ / "schedule.csv");
    if (!norms_ || !ledger_ || !schedule_) throw std::runtime_error("cannot write into " + dir_.string());
    write_norms_csv_header(norms_);
    write_ledger_csv_header(ledger_);
    write_schedule_csv_header(schedule_);
  }

  void initial(const FlowState& s) {
    norms_row(s, 0, 0, 0.0);
    write_schedule_csv_row(schedule_, 0, s.t, 0.0, s.eps, "initial");
  }

  void step(const FlowState& before, const StepRecord& r, const FlowState& after, const std::string& decision) {
    write_schedule_csv_row(schedule_, after.n, before.t + r.in.k_np1, r.in.k_np1, r.in.eps_np1, decision);
    if (decision == "halve") return;
    norms_row(after, r.res.picard_iters, r.res.krylov_iters_total, after.k);
    if (const auto L = step_ledger(r, after.n)) write_ledger_csv_row(ledger_, *L, after.t, after.k, after.eps);
    if (every_ > 0 && after.n % every_ == 0) snapshot(after);
  }

  void finish(const FlowState& s) { snapshot(s); }

 private:
  void norms_row(const FlowState& s, int picard, int krylov, double k) {
    norms_ << s.n << ',' << csv_number(s.t) << ',' << csv_number(k) << ',' << csv_number(s.eps) << ','
           << csv_number(l2norm(s.u)) << ',' << csv_number(l2norm(s.p)) << ','
           << csv_number(l2norm(divergence(s.u))) << ',' << picard << ',' << krylov << ',';
    if (pb_.exact) {
      const ErrorReport e = error_report(s.u, s.p, *pb_.exact, s.t);
      norms_ << csv_number(e.err_u) << ',' << csv_number(e.err_p);
    } else {
      norms_ << ',';
    }
    norms_ << '\n';
  }

  void snapshot(const FlowState& s) {
    char name[32];
    std::snprintf(name, sizeof name, "%06d", s.n);
    std::ofstream fu(dir_ / "snapshots" / ("u_" + std::string(name) + ".txt"));
    std::ofstream fp(dir_ / "snapshots" / ("p_" + std::string(name) + ".txt"));
    write_snapshot(fu, s.u);
    write_snapshot(fp, s.p);
  }

  std::filesystem::path dir_;
  const Problem& pb_;
  int every_;
  std::ofstream norms_, ledger_, schedule_;
};

// ---------------------------------------------------------------------------
// Convergence study

struct ConvergenceRow {
  double k = 0.0, eps = 0.0;
  int steps = 0;
  double err_u = 0.0, err_p = 0.0, div_norm = 0.0;
  double self_diff_u = NAN;  // ||u_k - u_{next k}|| at the final time
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  double order_u = NAN;             // least-squares slope of log err_u vs log k
  double order_p = NAN;
  double richardson_order_u = NAN;  // slope of log self_diff_u vs log k
};

/// Least-squares slope of log y against log x.
inline double fitted_order(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, "fitted_order: need at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// Final-time errors for each constant step k with eps = k^order.
inline ConvergenceTable convergence_study(const Problem& pb, const std::vector<double>& k_list, double t_final) {
  require(pb.exact.has_value(), "convergence_study: needs a manufactured solution");
  require(k_list.size() >= 2, "convergence_study: need at least two step sizes");
  const int order = scheme_order(pb.scheme);
  ConvergenceTable table;
  std::vector<VectorField> finals;
  for (double k : k_list) {
    const int steps = static_cast<int>(std::lround(t_final / k));
    require(steps >= 1 && std::abs(steps * k - t_final) <= 1e-9 * t_final,
            "convergence_study: k must divide t_final");
    std::vector<StepSample> plan(steps + 1, StepSample{k, eps_for_step(k, order)});
    FlowState s = simulate_plan(pb, plan);
    const ErrorReport e = error_report(s.u, s.p, *pb.exact, s.t);
    table.rows.push_back({k, eps_for_step(k, order), steps, e.err_u, e.err_p, e.div_norm, NAN});
    finals.push_back(std::move(s.u));
  }
  std::vector<double> ks, eu, ep;
  for (const auto& r : table.rows) {
    ks.push_back(r.k);
    eu.push_back(r.err_u);
    ep.push_back(r.err_p);
  }
  table.order_u = fitted_order(ks, eu);
  table.order_p = fitted_order(ks, ep);
  std::vector<double> kd, dd;
  for (std::size_t i = 0; i + 1 < finals.size(); ++i) {
    VectorField d = finals[i];
    axpy(-1.0, finals[i + 1], d);
    table.rows[i].self_diff_u = l2norm(d);
    kd.push_back(k_list[i]);
    dd.push_back(table.rows[i].self_diff_u);
  }
  if (kd.size() >= 2) table.richardson_order_u = fitted_order(kd, dd);
  return table;
}

// ---------------------------------------------------------------------------
// Acoustic run

struct AcousticRow {
  int n = 0;
  double t = 0.0, k = 0.0, eps = 0.0, eps_t_fd = 0.0;
  double W = 0.0, W_fd = NAN, E = 0.0;
  double W_rate_residual = NAN, E_rate_residual = NAN;
  double W_rate_rhs = NAN, W_rate = NAN;
};

struct AcousticReport {
  std::vector<AcousticRow> rows;
  double max_rel_drift_W = 0.0;     // max_n |W_n - W_0| / W_0
  double max_rel_drift_W_fd = 0.0;  // max_n |W_fd_n - W_fd_1| / W_fd_1
  double max_rel_drift_E = 0.0;
  double max_abs_W_rate_residual = 0.0;
  double max_abs_E_rate_residual = 0.0;
};

/// Integrate both acoustic forms from a standing wave at rest velocity.
/// eps(t) = eps0 (1 + eps_rate t).
inline AcousticReport simulate_acoustic(const GridSpec& grid, const AcousticConfig& ac,
                                        const SolverParams& params = {}) {
  if (!grid.periodic()) throw ConfigError("acoustic runs need grid.bc = periodic");
  const double e0 = ac.eps0, rate = ac.eps_rate;
  const EpsFn eps = [e0, rate](double t) { return e0 * (1.0 + rate * t); };
  const EpsFn eps_t = [e0, rate](double) { return e0 * rate; };
  const int steps = static_cast<int>(std::lround(ac.t_final / ac.k));
  require(steps >= 2, "simulate_acoustic: need at least two steps");
  const double k = ac.k;

  const PlaneWave pw{ac.mode, e0};
  AcousticWaveState w = pw.wave_state(grid, 0.0);
  AcousticSystemState sys = pw.system_state(grid, 0.0);

  AcousticReport rep;
  auto row_for = [&](int n) {
    AcousticRow r;
    r.n = n;
    r.t = w.t;
    r.k = k;
    r.eps = eps(w.t);
    r.eps_t_fd = (eps(w.t + k) - eps(w.t - k)) / (2.0 * k);
    r.W = wave_energy(w, r.eps);
    r.E = model_energy(sys, r.eps);
    return r;
  };
  rep.rows.push_back(row_for(0));
  ScalarField p_prev = w.p;
  for (int n = 1; n <= steps; ++n) {
    const AcousticWaveState w1 = acoustic_step(w, eps, k, params);
    const AcousticSystemState s1 = acoustic_step(sys, eps, k, params);
    const RateCheck rw = wave_energy_rate(w, w1, eps, eps_t);
    const RateCheck re = model_energy_rate(sys, s1, eps, eps_t);
    rep.rows.back().W_fd = n >= 2 ? wave_energy_fd(p_prev, w.p, w1.p, k, eps(w.t)) : NAN;
    p_prev = w.p;
    w = w1;
    sys = s1;
    AcousticRow r = row_for(n);
    r.W_rate_residual = rw.residual;
    r.W_rate_rhs = rw.rhs;
    r.W_rate = rw.rate;
    r.E_rate_residual = re.residual;
    rep.rows.push_back(r);
  }
  const double W0 = rep.rows.front().W, E0 = rep.rows.front().E;
  const double Wfd1 = rep.rows[1].W_fd;
  for (const auto& r : rep.rows) {
    if (W0 > 0) rep.max_rel_drift_W = std::max(rep.max_rel_drift_W, std::abs(r.W - W0) / W0);
    if (E0 > 0) rep.max_rel_drift_E = std::max(rep.max_rel_drift_E, std::abs(r.E - E0) / E0);
    if (std::isfinite(r.W_fd) && Wfd1 > 0)
      rep.max_rel_drift_W_fd = std::max(rep.max_rel_drift_W_fd, std::abs(r.W_fd - Wfd1) / Wfd1);
    if (std::isfinite(r.W_rate_residual))
      rep.max_abs_W_rate_residual = std::max(rep.max_abs_W_rate_residual, std::abs(r.W_rate_residual));
    if (std::isfinite(r.E_rate_residual))
      rep.max_abs_E_rate_residual = std::max(rep.max_abs_E_rate_residual, std::abs(r.E_rate_residual));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Schedule validation

struct ScheduleValidation {
  std::vector<StepSample> samples;
  SlowVariationReport slow;
  std::optional<ContinuumConditionReport> continuum;
};

/// Slow-variation audit of a schedule's step sequence. The adaptive controller
/// is audited on its worst case, doubling every step up to k_max.
inline ScheduleValidation validate_schedule(const ScheduleKind& kind, int order, const ValidateConfig& vc) {
  ScheduleValidation out;
  if (vc.doubling || std::holds_alternative<AdaptiveDivSchedule>(kind)) {
    double k = initial_step(kind);
    const double k_max = std::holds_alternative<AdaptiveDivSchedule>(kind) && !vc.doubling
                             ? std::get<AdaptiveDivSchedule>(kind).k_max
                             : INFINITY;
    for (int n = 0; n <= vc.steps; ++n) {
      out.samples.push_back({k, eps_for_step(k, order)});
      k = std::min(2.0 * k, k_max);
    }
  } else {
    out.samples = plan_steps(kind, order, vc.steps);
  }
  out.slow = validate_slow_variation(out.samples, vc.beta);
  if (!vc.doubling && !std::holds_alternative<AdaptiveDivSchedule>(kind)) {
    double t_end = 0.0;
    for (std::size_t i = 1; i < out.samples.size(); ++i) t_end += out.samples[i].k;
    const int m = std::max(8, 4 * vc.steps);
    const double dt = t_end / m;
    std::vector<double> e;
    for (int i = 0; i <= m; ++i) e.push_back(*continuum_eps(kind, i * dt, order));
    out.continuum = continuum_condition_check(e, dt);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Commands

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << std::setprecision(17);
  return os;
}

}  // namespace detail

inline int cmd_run_impl(const RunConfig& cfg, const std::filesystem::path& out) {
  const Problem pb = make_problem(cfg);
  RunWriter writer(out, pb, cfg.snapshot_every);
  const StepObserver obs = [&](const FlowState& b, const StepRecord& r, const FlowState& a, const std::string& d) {
    writer.step(b, r, a, d);
  };
  FlowState final_state;
  if (const auto* ad = std::get_if<AdaptiveDivSchedule>(&cfg.schedule)) {
    writer.initial(initial_flow_state(pb, eps_for_step(ad->k0, scheme_order(cfg.scheme))));
    final_state = simulate_adaptive(pb, *ad, cfg.t_final, obs).final_state;
  } else {
    const auto plan = plan_schedule(cfg.schedule, scheme_order(cfg.scheme), cfg.t_final);
    writer.initial(initial_flow_state(pb, plan.front().eps));
    final_state = simulate_plan(pb, plan, obs);
  }
  writer.finish(final_state);
  return kExitOk;
}

inline int cmd_adapt_impl(const RunConfig& cfg, const std::filesystem::path& out) {
  if (!std::holds_alternative<AdaptiveDivSchedule>(cfg.schedule))
    throw ConfigError("adapt: schedule.kind must be adaptive_div");
  if (cfg.forcing != ForcingChoice::Manufactured) throw ConfigError("adapt: forcing must be manufactured");
  const Problem pb = make_problem(cfg);
  std::filesystem::create_directories(out);
  std::ofstream series = detail::open_out(out / "adapt.csv");
  series << "# acflow adapt v1\n" << "n,t,k,eps,decision,err_u,err_p,norm_div\n";
  const StepObserver obs = [&](const FlowState& b, const StepRecord& r, const FlowState& a, const std::string& d) {
    const double t = b.t + r.in.k_np1;
    const ErrorReport e = error_report(r.res.u_np1, r.res.p_np1, *pb.exact, t);
    series << (d == "halve" ? b.n : a.n) << ',' << csv_number(t) << ',' << csv_number(r.in.k_np1) << ','
           << csv_number(r.in.eps_np1) << ',' << d << ',' << csv_number(e.err_u) << ',' << csv_number(e.err_p)
           << ',' << csv_number(e.div_norm) << '\n';
  };
  const AdaptiveRun run = simulate_adaptive(pb, std::get<AdaptiveDivSchedule>(cfg.schedule), cfg.t_final, obs);
  std::ofstream summary = detail::open_out(out / "adapt_summary.txt");
  summary << "accepted_steps = " << run.accepted.size() - 1 << "\n"
          << "doublings = " << run.doublings << "\n"
          << "halvings = " << run.halvings << "\n"
          << "final_time = " << csv_number(run.final_state.t) << "\n";
  return kExitOk;
}

inline int cmd_convergence_impl(const RunConfig& cfg, const std::filesystem::path& out) {
  if (cfg.forcing != ForcingChoice::Manufactured) throw ConfigError("convergence: forcing must be manufactured");
  if (cfg.k_list.size() < 2) throw ConfigError("convergence: convergence.k_list needs at least two entries");
  const Problem pb = make_problem(cfg);
  const ConvergenceTable table = convergence_study(pb, cfg.k_list, cfg.t_final);
  std::filesystem::create_directories(out);
  std::ofstream os = detail::open_out(out / "convergence.csv");
  os << "# acflow convergence v1\n" << "k,eps,steps,err_u,err_p,div_norm,self_diff_u\n";
  for (const auto& r : table.rows)
    os << csv_number(r.k) << ',' << csv_number(r.eps) << ',' << r.steps << ',' << csv_number(r.err_u) << ','
       << csv_number(r.err_p) << ',' << csv_number(r.div_norm) << ','
       << (std::isfinite(r.self_diff_u) ? csv_number(r.self_diff_u) : "") << '\n';
  std::ofstream ord = detail::open_out(out / "orders.csv");
  ord << "# acflow orders v1\n" << "quantity,order\n"
      << "err_u," << csv_number(table.order_u) << "\n"
      << "err_p," << csv_number(table.order_p) << "\n"
      << "self_diff_u," << csv_number(table.richardson_order_u) << "\n";
  return kExitOk;
}

inline int cmd_acoustic_impl(const RunConfig& cfg, const std::filesystem::path& out) {
  const AcousticReport rep = simulate_acoustic(cfg.grid(), cfg.acoustic, cfg.solver);
  std::filesystem::create_directories(out);
  std::ofstream os = detail::open_out(out / "acoustic.csv");
  write_acoustic_csv_header(os);
  auto num = [](double x) { return std::isfinite(x) ? csv_number(x) : std::string(); };
  for (const auto& r : rep.rows)
    os << r.n << ',' << num(r.t) << ',' << num(r.k) << ',' << num(r.eps) << ',' << num(r.eps_t_fd) << ','
       << num(r.W) << ',' << num(r.W_fd) << ',' << num(r.E) << ',' << num(r.W_rate_residual) << ','
       << num(r.E_rate_residual) << '\n';
  std::ofstream sm = detail::open_out(out / "acoustic_summary.txt");
  sm << "max_rel_drift_W = " << csv_number(rep.max_rel_drift_W) << "\n"
     << "max_rel_drift_W_fd = " << csv_number(rep.max_rel_drift_W_fd) << "\n"
     << "max_rel_drift_E = " << csv_number(rep.max_rel_drift_E) << "\n"
     << "max_abs_W_rate_residual = " << csv_number(rep.max_abs_W_rate_residual) << "\n"
     << "max_abs_E_rate_residual = " << csv_number(rep.max_abs_E_rate_residual) << "\n";
  return kExitOk;
}

inline int cmd_validate_schedule_impl(const RunConfig& cfg, const std::filesystem::path& out) {
  const ScheduleValidation v = validate_schedule(cfg.schedule, scheme_order(cfg.scheme), cfg.validate);
  std::filesystem::create_directories(out);
  std::ofstream os = detail::open_out(out / "validate.csv");
  os << "# acflow validate v1\n" << "n,k,eps,ratio\n";
  for (std::size_t n = 0; n < v.samples.size(); ++n) {
    const auto& s = v.samples[n];
    os << n << ',' << csv_number(s.k) << ',' << csv_number(s.eps) << ',';
    if (n + 1 < v.samples.size()) os << csv_number(std::abs(v.samples[n + 1].eps - s.eps) / (s.k * s.eps));
    os << '\n';
  }
  std::ofstream rp = detail::open_out(out / "validate_report.txt");
  rp << "schedule = " << (cfg.validate.doubling ? std::string("doubling") : schedule_name(cfg.schedule)) << "\n"
     << "beta = " << csv_number(cfg.validate.beta) << "\n"
     << "max_ratio = " << csv_number(v.slow.max_ratio) << "\n"
     << "argmax = " << v.slow.argmax << "\n"
     << "passes = " << (v.slow.passes ? "true" : "false") << "\n"
     << "has_jumps = " << (v.slow.has_jumps ? "true" : "false") << "\n";
  if (v.continuum)
    rp << "sup_eps = " << csv_number(v.continuum->sup_eps) << "\n"
       << "sup_rel_eps_t = " << csv_number(v.continuum->sup_rel_eps_t) << "\n"
       << "sup_rel_eps_tt = " << csv_number(v.continuum->sup_rel_eps_tt) << "\n";
  return kExitOk;
}

/// Map library errors to exit codes, reporting on `err`.
template <class Fn>
int run_guarded(Fn&& fn, std::ostream& err = std::cerr) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const StepStuck& e) {
    err << "controller stuck: " << e.what() << '\n';
    return kExitStuck;
  } catch (const Error& e) {
    err << "solver failure: " << e.what() << '\n';
    return kExitSolver;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
}

inline int cmd_run(const RunConfig& c, const std::filesystem::path& o) {
  return run_guarded([&] { return cmd_run_impl(c, o); });
}
inline int cmd_adapt(const RunConfig& c, const std::filesystem::path& o) {
  return run_guarded([&] { return cmd_adapt_impl(c, o); });
}
inline int cmd_convergence(const RunConfig& c, const std::filesystem::path& o) {
  return run_guarded([&] { return cmd_convergence_impl(c, o); });
}
inline int cmd_acoustic(const RunConfig& c, const std::filesystem::path& o) {
  return run_guarded([&] { return cmd_acoustic_impl(c, o); });
}
inline int cmd_validate_schedule(const RunConfig& c, const std::filesystem::path& o) {
  return run_guarded([&] { return cmd_validate_schedule_impl(c, o); });
}

}  // namespace acflow
