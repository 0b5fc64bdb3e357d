#pragma once

// Step-size / relaxation-parameter schedules. eps is tied to the step,
// eps = k^order (order 1 for Euler momentum, 2 for BDF2).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "acflow/errors.hpp"

namespace acflow {

struct ConstantSchedule {
  double k = 0.01;
};

struct OscillatingSchedule {
  double k_base = 0.01;
  double amp = 0.002;
  double freq = 10.0;
  int warmup_steps = 10;
};

struct AdaptiveDivSchedule {
  double tol_lo = 0.001;
  double tol_hi = 0.01;
  double k0 = 0.001;
  double k_min = 1e-6;
  double k_max = 0.1;
};

struct SmoothRampSchedule {
  double k0 = 0.005;
  double k1 = 0.02;
  double ramp_time = 1.0;
};

using ScheduleKind = std::variant<ConstantSchedule, OscillatingSchedule, AdaptiveDivSchedule, SmoothRampSchedule>;

inline std::string schedule_name(const ScheduleKind& kind) {
  static constexpr std::array<const char*, 4> names{"constant", "oscillating", "adaptive_div", "smooth_ramp"};
  return names[kind.index()];
}

inline void validate(const ScheduleKind& kind) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ConstantSchedule>) {
          require(s.k > 0.0, "constant schedule: k must be positive");
        } else if constexpr (std::is_same_v<T, OscillatingSchedule>) {
          require(s.k_base > 0.0 && s.amp >= 0.0 && s.amp < s.k_base,
                  "oscillating schedule: need 0 <= amp < k_base");
          require(s.warmup_steps >= 0, "oscillating schedule: warmup_steps must be >= 0");
        } else if constexpr (std::is_same_v<T, AdaptiveDivSchedule>) {
          require(s.tol_lo > 0.0 && s.tol_lo < s.tol_hi, "adaptive_div schedule: need 0 < tol_lo < tol_hi");
          require(s.k_min > 0.0 && s.k_min <= s.k0 && s.k0 <= s.k_max,
                  "adaptive_div schedule: need 0 < k_min <= k0 <= k_max");
        } else {
          require(s.k0 > 0.0 && s.k1 > 0.0 && s.ramp_time > 0.0, "smooth_ramp schedule: parameters must be positive");
        }
      },
      kind);
}

/// Initial step size of a schedule.
inline double initial_step(const ScheduleKind& kind) {
  return std::visit(
      [](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ConstantSchedule>) return s.k;
        else if constexpr (std::is_same_v<T, OscillatingSchedule>) return s.k_base;
        else return s.k0;
      },
      kind);
}

struct TimeSample {
  double t = 0.0;
  double eps = 0.0;
};

/// State carried between steps. `k` and `eps` are the values of the last
/// accepted step (at n = 0: the schedule's initial values). For the adaptive
/// controller `k` is also the next trial step.
struct ScheduleState {
  int n = 0;
  double t = 0.0;
  double k = 0.0;
  double eps = 0.0;
  std::array<TimeSample, 3> history{};
  int history_size = 0;

  void push_history() {
    std::rotate(history.begin(), history.begin() + 1, history.end());
    history.back() = {t, eps};
    history_size = std::min(history_size + 1, 3);
  }
};

inline double eps_for_step(double k, int order) { return order == 2 ? k * k : k; }

inline ScheduleState initial_state(const ScheduleKind& kind, int order = 1) {
  validate(kind);
  ScheduleState st;
  st.k = initial_step(kind);
  st.eps = eps_for_step(st.k, order);
  st.push_history();
  return st;
}

/// Record an accepted step of size k with relaxation parameter eps.
inline ScheduleState accept(ScheduleState st, double k, double eps) {
  require(k > 0.0 && eps > 0.0, "accept: k and eps must be positive");
  st.n += 1;
  st.t += k;
  st.k = k;
  st.eps = eps;
  st.push_history();
  return st;
}

/// C^2 quintic blend from 0 to 1 on [0,1].
inline double smoothstep5(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * x * (x * (6.0 * x - 15.0) + 10.0);
}

inline double smoothstep5_derivative(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  return 30.0 * x * x * (x - 1.0) * (x - 1.0);
}

inline double ramp_step(const SmoothRampSchedule& s, double t) {
  return s.k0 + (s.k1 - s.k0) * smoothstep5(t / s.ramp_time);
}

inline double ramp_step_derivative(const SmoothRampSchedule& s, double t) {
  return (s.k1 - s.k0) * smoothstep5_derivative(t / s.ramp_time) / s.ramp_time;
}

struct Proposal {
  double k = 0.0;
  double eps = 0.0;
};

/// Next (k, eps) for the step leaving state `st`. Pure.
inline Proposal propose(const ScheduleKind& kind, const ScheduleState& st, int order = 1) {
  const double k = std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ConstantSchedule>) {
          return s.k;
        } else if constexpr (std::is_same_v<T, OscillatingSchedule>) {
          return st.n <= s.warmup_steps ? s.k_base : s.k_base + s.amp * std::sin(s.freq * st.t);
        } else if constexpr (std::is_same_v<T, AdaptiveDivSchedule>) {
          return std::clamp(st.k, s.k_min, s.k_max);
        } else {
          return ramp_step(s, st.t);
        }
      },
      kind);
  return {k, eps_for_step(k, order)};
}

/// Closed-form eps(t) for the schedules that have one (not AdaptiveDiv).
/// The oscillating warm-up is mapped to t < warmup_steps * k_base.
inline std::optional<double> continuum_eps(const ScheduleKind& kind, double t, int order = 1) {
  std::optional<double> k = std::visit(
      [&](const auto& s) -> std::optional<double> {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ConstantSchedule>) return s.k;
        else if constexpr (std::is_same_v<T, OscillatingSchedule>)
          return t < s.warmup_steps * s.k_base ? s.k_base : s.k_base + s.amp * std::sin(s.freq * t);
        else if constexpr (std::is_same_v<T, AdaptiveDivSchedule>) return std::nullopt;
        else return ramp_step(s, t);
      },
      kind);
  if (!k) return std::nullopt;
  return eps_for_step(*k, order);
}

// ---------------------------------------------------------------------------
// Divergence-driven halving-and-doubling controller

enum class Decision { Accept, AcceptAndDouble, RejectAndHalve };

inline std::string to_string(Decision d) {
  switch (d) {
    case Decision::Accept: return "accept";
    case Decision::AcceptAndDouble: return "double";
    case Decision::RejectAndHalve: return "halve";
  }
  return "?";
}

struct AuditOutcome {
  Decision decision = Decision::Accept;
  double k_next = 0.0;  // next trial step (retry step when rejected)
};

/// Judge a trial step of size st.k from its ||div u_h||.
inline AuditOutcome audit(const AdaptiveDivSchedule& s, double div_norm, const ScheduleState& st) {
  require(div_norm >= 0.0, "audit: divergence norm must be non-negative");
  if (div_norm > s.tol_hi) {
    if (st.k <= s.k_min)
      throw StepStuck("adaptive controller: ||div u|| = " + std::to_string(div_norm) + " above " +
                      std::to_string(s.tol_hi) + " at k_min = " + std::to_string(s.k_min));
    return {Decision::RejectAndHalve, std::max(0.5 * st.k, s.k_min)};
  }
  if (div_norm < s.tol_lo) return {Decision::AcceptAndDouble, std::min(2.0 * st.k, s.k_max)};
  return {Decision::Accept, st.k};
}

// ---------------------------------------------------------------------------
// Validators

struct StepSample {
  double k = 0.0;
  double eps = 0.0;
};

struct SlowVariationReport {
  double max_ratio = 0.0;  // max_n |eps_{n+1} - eps_n| / (k_n eps_n)
  std::size_t argmax = 0;
  bool passes = true;      // max_ratio <= beta
  bool has_jumps = false;  // some eps_{n+1}/eps_n >= 2 or <= 1/2 (halving/doubling)
};

inline SlowVariationReport validate_slow_variation(std::span<const StepSample> samples, double beta) {
  require(samples.size() >= 2, "validate_slow_variation: need at least two samples");
  SlowVariationReport rep;
  for (std::size_t n = 0; n + 1 < samples.size(); ++n) {
    const auto& a = samples[n];
    const auto& b = samples[n + 1];
    const double ratio = std::abs(b.eps - a.eps) / (a.k * a.eps);
    if (ratio > rep.max_ratio) {
      rep.max_ratio = ratio;
      rep.argmax = n;
    }
    const double q = b.eps / a.eps;
    if (q >= 2.0 || q <= 0.5) rep.has_jumps = true;
  }
  rep.passes = rep.max_ratio <= beta;
  return rep;
}

struct ContinuumConditionReport {
  double sup_eps = 0.0;
  double sup_rel_eps_t = 0.0;   // sup |eps_t / eps|
  double sup_rel_eps_tt = 0.0;  // sup |eps_tt / eps|
};

/// Centred finite-difference estimates over uniformly spaced eps(t) samples.
inline ContinuumConditionReport continuum_condition_check(std::span<const double> eps, double dt) {
  if (eps.size() < 5) throw ContractViolation("continuum_condition_check: need at least 5 samples");
  require(dt > 0.0, "continuum_condition_check: dt must be positive");
  ContinuumConditionReport rep;
  for (double e : eps) rep.sup_eps = std::max(rep.sup_eps, e);
  for (std::size_t i = 1; i + 1 < eps.size(); ++i) {
    const double et = (eps[i + 1] - eps[i - 1]) / (2.0 * dt);
    const double ett = (eps[i + 1] - 2.0 * eps[i] + eps[i - 1]) / (dt * dt);
    rep.sup_rel_eps_t = std::max(rep.sup_rel_eps_t, std::abs(et / eps[i]));
    rep.sup_rel_eps_tt = std::max(rep.sup_rel_eps_tt, std::abs(ett / eps[i]));
  }
  return rep;
}

/// Time reparameterisation used by the acoustic analysis: with eps(t) = e A(t),
/// tau = t / sqrt(e) and s(tau) solving ds/dtau = 1/sqrt(A). Trapezoidal
/// quadrature on the given increasing t grid. Returns (tau, s) per sample.
struct RescaledTime {
  double t, tau, s;
};

template <class EpsFn>
std::vector<RescaledTime> rescaled_time(EpsFn&& eps, double eps_scale, std::span<const double> t_grid) {
  require(eps_scale > 0.0, "rescaled_time: eps_scale must be positive");
  std::vector<RescaledTime> out;
  out.reserve(t_grid.size());
  double s = 0.0;
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    const double tau = t_grid[i] / std::sqrt(eps_scale);
    if (i > 0) {
      const double tau_prev = t_grid[i - 1] / std::sqrt(eps_scale);
      const double a0 = eps(t_grid[i - 1]) / eps_scale, a1 = eps(t_grid[i]) / eps_scale;
      s += 0.5 * (tau - tau_prev) * (1.0 / std::sqrt(a0) + 1.0 / std::sqrt(a1));
    }
    out.push_back({t_grid[i], tau, s});
  }
  return out;
}

inline void write_schedule_csv_header(std::ostream& os) {
  os << "# acflow schedule v1\n";
  os << "n,t,k,eps,decision\n";
}

inline void write_schedule_csv_row(std::ostream& os, int n, double t, double k, double eps, const std::string& decision) {
  os.precision(17);
  os << n << ',' << t << ',' << k << ',' << eps << ',' << decision << '\n';
}

}  // namespace acflow
