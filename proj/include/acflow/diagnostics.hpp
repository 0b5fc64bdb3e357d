#pragma once

// Energy ledgers, 0-stability audit, manufactured solutions and error norms.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "acflow/errors.hpp"
#include "acflow/grid.hpp"
#include "acflow/stepper.hpp"

namespace acflow {

/// y = 1/2 int |u|^2 + eps/2 int p^2
inline double model_energy(const VectorField& u, const ScalarField& p, double eps) {
  return 0.5 * inner(u, u) + 0.5 * eps * inner(p, p);
}

// ---------------------------------------------------------------------------
// Per-step energy ledger.
//
//   [KE + PE]_end - [KE + PE]_start + jump_u + jump_p + viscous
//       = work + continuity_work + eps_source
//
// new scheme:       jump_p = eps_n/2     |p_{n+1}-p_n|^2, eps_source = 0
// standard scheme:  jump_p = eps_{n+1}/2 |p_{n+1}-p_n|^2,
//                   eps_source = 1/2 int (eps_{n+1}-eps_n) p_n^2
// continuity_work = k int g p_{n+1} (zero without a continuity source).

struct EnergyLedger {
  int n = 0;
  double kinetic_start = 0.0, kinetic_end = 0.0;
  double pressure_start = 0.0, pressure_end = 0.0;
  double jump_u = 0.0;
  double jump_p = 0.0;
  double jump_p_alt = 0.0;  // the other dissipation coefficient, for the record
  double viscous = 0.0;
  double work = 0.0;
  double continuity_work = 0.0;
  double eps_source = 0.0;
  double residual = 0.0;
  bool standard = false;

  double max_term() const {
    const std::array<double, 10> terms{kinetic_start, kinetic_end, pressure_start, pressure_end, jump_u,
                                       jump_p,        viscous,     work,           continuity_work, eps_source};
    double m = 0.0;
    for (double t : terms) m = std::max(m, std::abs(t));
    return m;
  }

  double relative_residual() const {
    const double m = max_term();
    return m > 0.0 ? std::abs(residual) / m : std::abs(residual);
  }
};

namespace detail {

inline EnergyLedger ledger_common(const StepInputs& in, const StepResult& out, int n) {
  EnergyLedger L;
  L.n = n;
  const double k = in.k_np1;
  L.kinetic_start = 0.5 * inner(in.u_n, in.u_n);
  L.kinetic_end = 0.5 * inner(out.u_np1, out.u_np1);
  L.pressure_start = 0.5 * in.eps_n * inner(in.p_n, in.p_n);
  L.pressure_end = 0.5 * in.eps_np1 * inner(out.p_np1, out.p_np1);
  const VectorField du = linear_combination(1.0, out.u_np1, -1.0, in.u_n);
  L.jump_u = 0.5 * inner(du, du);
  L.viscous = k * in.nu * grad_norm_sq(out.u_np1);
  L.work = k * inner(out.u_np1, in.f_np1);
  if (in.g_np1) L.continuity_work = k * inner(*in.g_np1, out.p_np1);
  return L;
}

inline double pressure_jump_sq(const StepInputs& in, const StepResult& out) {
  const ScalarField dp = linear_combination(1.0, out.p_np1, -1.0, in.p_n);
  return inner(dp, dp);
}

inline void close_ledger(EnergyLedger& L) {
  const double lhs = L.kinetic_end + L.pressure_end - L.kinetic_start - L.pressure_start + L.jump_u + L.jump_p + L.viscous;
  const double rhs = L.work + L.continuity_work + L.eps_source;
  L.residual = lhs - rhs;
}

}  // namespace detail

/// Ledger of a completed step_new.
inline EnergyLedger ledger_new(const StepInputs& in, const StepResult& out, int n = 0) {
  EnergyLedger L = detail::ledger_common(in, out, n);
  const double dp2 = detail::pressure_jump_sq(in, out);
  L.jump_p = 0.5 * in.eps_n * dp2;
  L.jump_p_alt = 0.5 * in.eps_np1 * dp2;
  detail::close_ledger(L);
  return L;
}

/// Ledger of a completed step_standard.
inline EnergyLedger ledger_standard(const StepInputs& in, const StepResult& out, int n = 0) {
  EnergyLedger L = detail::ledger_common(in, out, n);
  L.standard = true;
  const double dp2 = detail::pressure_jump_sq(in, out);
  L.jump_p = 0.5 * in.eps_np1 * dp2;
  L.jump_p_alt = 0.5 * in.eps_n * dp2;
  L.eps_source = 0.5 * (in.eps_np1 - in.eps_n) * inner(in.p_n, in.p_n);
  detail::close_ledger(L);
  return L;
}

// ---------------------------------------------------------------------------
// 0-stability audit: y_n <= prod_{j<n} (1 + k_j beta) y_0 (1 + slack) and
// y_n <= exp(beta t_n) y_0 (1 + slack).

struct EnergySample {
  double t = 0.0;  // t_n
  double k = 0.0;  // k_n as used in the slow-variation hypothesis
  double y = 0.0;  // y_n
};

struct ZeroStabilityReport {
  bool passes = true;
  double worst_product_margin = 0.0;  // max_n y_n / product bound
  double worst_exp_margin = 0.0;      // max_n y_n / exponential bound
  std::optional<std::size_t> first_failure;
};

inline ZeroStabilityReport zero_stability_audit(std::span<const EnergySample> series, double beta,
                                                double slack = 1e-8) {
  require(!series.empty(), "zero_stability_audit: empty series");
  require(beta >= 0.0, "zero_stability_audit: beta must be non-negative");
  ZeroStabilityReport rep;
  const double y0 = series[0].y;
  double product = 1.0;
  for (std::size_t n = 0; n < series.size(); ++n) {
    if (n > 0) product *= 1.0 + series[n - 1].k * beta;
    const double pb = product * y0 * (1.0 + slack);
    const double eb = std::exp(beta * series[n].t) * y0 * (1.0 + slack);
    const double y = series[n].y;
    if (pb > 0.0) rep.worst_product_margin = std::max(rep.worst_product_margin, y / pb);
    if (eb > 0.0) rep.worst_exp_margin = std::max(rep.worst_exp_margin, y / eb);
    if ((y > pb || y > eb) && !rep.first_failure) {
      rep.first_failure = n;
      rep.passes = false;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Manufactured solutions u = s(t) U(x,y), p = c(t) P(x,y), with hand-derived
// derivatives.

struct PointDerivatives {
  std::array<double, 2> u{};      // velocity
  std::array<double, 2> u_t{};
  std::array<double, 4> grad{};   // dux/dx, dux/dy, duy/dx, duy/dy
  std::array<double, 2> lap{};
  double p = 0.0;
  double p_t = 0.0;
  std::array<double, 2> grad_p{};
};

struct ManufacturedSolution {
  std::string name;
  std::function<std::array<double, 2>(double x, double y, double t)> velocity;
  std::function<double(double x, double y, double t)> pressure;
  std::function<PointDerivatives(double x, double y, double t)> derivatives;
  bool divergence_free = false;
};

namespace detail {
inline constexpr double pi = std::numbers::pi;

inline void pressure_part(PointDerivatives& d, double x, double y, double t) {
  const double P = std::cos(pi * x) * std::sin(pi * y);
  d.p = std::cos(t) * P;
  d.p_t = -std::sin(t) * P;
  d.grad_p = {-pi * std::sin(pi * x) * std::sin(pi * y) * std::cos(t), pi * std::cos(pi * x) * std::cos(pi * y) * std::cos(t)};
}
}  // namespace detail

/// The pair as printed for the adaptive test:
///   u = sin t (sin(2 pi x) sin^2(2 pi x), sin(2 pi x) sin^2(2 pi y)),
///   p = cos t cos(pi x) sin(pi y).
/// Its velocity is not divergence-free; use it with a continuity source.
inline ManufacturedSolution printed_pair() {
  using detail::pi;
  ManufacturedSolution ms;
  ms.name = "printed";
  ms.velocity = [](double x, double y, double t) -> std::array<double, 2> {
    const double a = std::sin(2 * pi * x), b = std::sin(2 * pi * y);
    return {std::sin(t) * a * a * a, std::sin(t) * a * b * b};
  };
  ms.pressure = [](double x, double y, double t) { return std::cos(t) * std::cos(pi * x) * std::sin(pi * y); };
  ms.derivatives = [](double x, double y, double t) {
    PointDerivatives d;
    const double sa = std::sin(2 * pi * x), ca = std::cos(2 * pi * x);
    const double sb = std::sin(2 * pi * y), cb = std::cos(2 * pi * y);
    const double U1 = sa * sa * sa, U2 = sa * sb * sb;
    const double U1x = 6 * pi * sa * sa * ca;
    const double U2x = 2 * pi * ca * sb * sb, U2y = 2 * pi * sa * std::sin(4 * pi * y);
    const double L1 = 12 * pi * pi * (2 * sa * ca * ca - sa * sa * sa);
    const double L2 = -4 * pi * pi * sa * sb * sb + 8 * pi * pi * sa * (cb * cb - sb * sb);
    const double s = std::sin(t), c = std::cos(t);
    d.u = {s * U1, s * U2};
    d.u_t = {c * U1, c * U2};
    d.grad = {s * U1x, 0.0, s * U2x, s * U2y};
    d.lap = {s * L1, s * L2};
    detail::pressure_part(d, x, y, t);
    return d;
  };
  return ms;
}

/// Divergence-free alternate:
///   u = sin t (sin(2 pi y) sin^2(pi x), -sin(2 pi x) sin^2(pi y)), same p.
/// Vanishes on the boundary of the unit square.
inline ManufacturedSolution divfree_alt_pair() {
  using detail::pi;
  ManufacturedSolution ms;
  ms.name = "divfree_alt";
  ms.divergence_free = true;
  ms.velocity = [](double x, double y, double t) -> std::array<double, 2> {
    const double sx = std::sin(pi * x), sy = std::sin(pi * y);
    return {std::sin(t) * std::sin(2 * pi * y) * sx * sx, -std::sin(t) * std::sin(2 * pi * x) * sy * sy};
  };
  ms.pressure = [](double x, double y, double t) { return std::cos(t) * std::cos(pi * x) * std::sin(pi * y); };
  ms.derivatives = [](double x, double y, double t) {
    PointDerivatives d;
    const double sx = std::sin(pi * x), sy = std::sin(pi * y);
    const double s2x = std::sin(2 * pi * x), c2x = std::cos(2 * pi * x);
    const double s2y = std::sin(2 * pi * y), c2y = std::cos(2 * pi * y);
    const double U1 = s2y * sx * sx, U2 = -s2x * sy * sy;
    const double U1x = pi * s2y * s2x, U1y = 2 * pi * c2y * sx * sx;
    const double U2x = -2 * pi * c2x * sy * sy, U2y = -pi * s2x * s2y;
    const double L1 = 2 * pi * pi * s2y * c2x - 4 * pi * pi * s2y * sx * sx;
    const double L2 = 4 * pi * pi * s2x * sy * sy - 2 * pi * pi * s2x * c2y;
    const double s = std::sin(t), c = std::cos(t);
    d.u = {s * U1, s * U2};
    d.u_t = {c * U1, c * U2};
    d.grad = {s * U1x, s * U1y, s * U2x, s * U2y};
    d.lap = {s * L1, s * L2};
    detail::pressure_part(d, x, y, t);
    return d;
  };
  return ms;
}

inline ManufacturedSolution zero_pair() {
  ManufacturedSolution ms;
  ms.name = "zero";
  ms.divergence_free = true;
  ms.velocity = [](double, double, double) -> std::array<double, 2> { return {0.0, 0.0}; };
  ms.pressure = [](double, double, double) { return 0.0; };
  ms.derivatives = [](double, double, double) { return PointDerivatives{}; };
  return ms;
}

inline ManufacturedSolution manufactured_from_string(const std::string& s) {
  if (s == "printed") return printed_pair();
  if (s == "divfree_alt") return divfree_alt_pair();
  if (s == "zero") return zero_pair();
  throw ContractViolation("unknown manufactured solution '" + s + "'");
}

/// Model the forcing is built for.
struct ForcingModel {
  double nu = 1.0;
  std::function<double(double)> eps = [](double) { return 0.0; };
  std::function<double(double)> eps_t = [](double) { return 0.0; };
  bool continuity_source = false;
  // standard: g = eps p_t + div u; new/bdf2: g = eps p_t + 1/2 eps_t p + div u
  Scheme form = Scheme::New;
};

struct Forcing {
  std::function<std::array<double, 2>(double x, double y, double t)> f;
  std::function<double(double x, double y, double t)> g;  // identically zero when disabled
  bool has_source = false;
};

/// f = u_t + (u.grad)u + 1/2 (div u) u + grad p - nu Lap u, and the optional
/// continuity source. Without a source the velocity must be divergence-free.
inline Forcing exact_forcing(const ManufacturedSolution& ms, const ForcingModel& model) {
  if (!model.continuity_source && !ms.divergence_free)
    throw ContractViolation("exact_forcing: '" + ms.name + "' is not divergence-free; enable the continuity source");
  Forcing F;
  F.has_source = model.continuity_source;
  auto deriv = ms.derivatives;
  const double nu = model.nu;
  F.f = [deriv, nu](double x, double y, double t) -> std::array<double, 2> {
    const PointDerivatives d = deriv(x, y, t);
    const double div = d.grad[0] + d.grad[3];
    const double ax = d.u[0] * d.grad[0] + d.u[1] * d.grad[1];
    const double ay = d.u[0] * d.grad[2] + d.u[1] * d.grad[3];
    return {d.u_t[0] + ax + 0.5 * div * d.u[0] + d.grad_p[0] - nu * d.lap[0],
            d.u_t[1] + ay + 0.5 * div * d.u[1] + d.grad_p[1] - nu * d.lap[1]};
  };
  if (model.continuity_source) {
    auto eps = model.eps, eps_t = model.eps_t;
    const bool half_term = model.form != Scheme::Standard;
    F.g = [deriv, eps, eps_t, half_term](double x, double y, double t) {
      const PointDerivatives d = deriv(x, y, t);
      double g = eps(t) * d.p_t + d.grad[0] + d.grad[3];
      if (half_term) g += 0.5 * eps_t(t) * d.p;
      return g;
    };
  } else {
    F.g = [](double, double, double) { return 0.0; };
  }
  return F;
}

inline VectorField sample_forcing(const GridSpec& grid, const Forcing& F, double t) {
  return sample_vector(
      grid, [&](double x, double y) { return F.f(x, y, t)[0]; }, [&](double x, double y) { return F.f(x, y, t)[1]; });
}

inline ScalarField sample_source(const GridSpec& grid, const Forcing& F, double t) {
  return sample_scalar(grid, [&](double x, double y) { return F.g(x, y, t); });
}

inline VectorField sample_velocity(const GridSpec& grid, const ManufacturedSolution& ms, double t) {
  return sample_vector(
      grid, [&](double x, double y) { return ms.velocity(x, y, t)[0]; },
      [&](double x, double y) { return ms.velocity(x, y, t)[1]; });
}

inline ScalarField sample_pressure(const GridSpec& grid, const ManufacturedSolution& ms, double t) {
  return sample_scalar(grid, [&](double x, double y) { return ms.pressure(x, y, t); });
}

/// Max-norm residual of the continuum equations with f and g subtracted,
/// using centred differences of the closed-form u, p only (step delta in x, y
/// and t) at a fixed interior point set.
inline double forcing_fd_residual(const ManufacturedSolution& ms, const ForcingModel& model, const Forcing& F,
                                  double delta) {
  auto U = ms.velocity;
  auto P = ms.pressure;
  double worst = 0.0;
  for (int a = 1; a <= 5; ++a)
    for (int b = 1; b <= 5; ++b)
      for (double t : {0.3, 0.9}) {
        const double x = 0.137 * a + 0.05, y = 0.161 * b + 0.02;
        const auto u = U(x, y, t);
        const auto uxp = U(x + delta, y, t), uxm = U(x - delta, y, t);
        const auto uyp = U(x, y + delta, t), uym = U(x, y - delta, t);
        const auto utp = U(x, y, t + delta), utm = U(x, y, t - delta);
        const double h2 = 2.0 * delta, dd = delta * delta;
        const double div = (uxp[0] - uxm[0]) / h2 + (uyp[1] - uym[1]) / h2;
        const double px = (P(x + delta, y, t) - P(x - delta, y, t)) / h2;
        const double py = (P(x, y + delta, t) - P(x, y - delta, t)) / h2;
        const double pt = (P(x, y, t + delta) - P(x, y, t - delta)) / h2;
        const auto f = F.f(x, y, t);
        for (int c = 0; c < 2; ++c) {
          const double ut = (utp[c] - utm[c]) / h2;
          const double dx = (uxp[c] - uxm[c]) / h2, dy = (uyp[c] - uym[c]) / h2;
          const double lap = (uxp[c] - 2 * u[c] + uxm[c]) / dd + (uyp[c] - 2 * u[c] + uym[c]) / dd;
          const double gp = c == 0 ? px : py;
          const double r = ut + u[0] * dx + u[1] * dy + 0.5 * div * u[c] + gp - model.nu * lap - f[c];
          worst = std::max(worst, std::abs(r));
        }
        double rc = div - F.g(x, y, t);
        if (F.has_source) {
          rc += model.eps(t) * pt;
          if (model.form != Scheme::Standard) rc += 0.5 * model.eps_t(t) * P(x, y, t);
        }
        worst = std::max(worst, std::abs(rc));
      }
  return worst;
}

/// Check f, g against the finite-difference oracle; throws OracleFailed when
/// the residual does not decay at order >= min_order under delta halving.
/// Returns the observed order (infinite when both residuals are round-off).
inline double verify_forcing(const ManufacturedSolution& ms, const ForcingModel& model, const Forcing& F,
                             double delta = 1e-3, double min_order = 1.9) {
  const double r1 = forcing_fd_residual(ms, model, F, delta);
  const double r2 = forcing_fd_residual(ms, model, F, 0.5 * delta);
  if (r1 < 1e-10 && r2 < 1e-10) return INFINITY;
  const double order = std::log2(r1 / r2);
  if (!(order >= min_order))
    throw OracleFailed("manufactured forcing for '" + ms.name + "' fails the finite-difference check (order " +
                       std::to_string(order) + ")");
  return order;
}

struct ErrorReport {
  double err_u = 0.0;
  double err_p = 0.0;
  double div_norm = 0.0;
};

inline ErrorReport error_report(const VectorField& u, const ScalarField& p, const ManufacturedSolution& ms, double t) {
  check_same_grid(u.grid, p.grid, "error_report");
  ErrorReport r;
  VectorField eu = sample_velocity(u.grid, ms, t);
  scale(-1.0, eu);
  axpy(1.0, u, eu);
  ScalarField ep = sample_pressure(p.grid, ms, t);
  scale(-1.0, ep);
  axpy(1.0, p, ep);
  r.err_u = l2norm(eu);
  r.err_p = l2norm(ep);
  r.div_norm = l2norm(divergence(u));
  return r;
}

// ---------------------------------------------------------------------------
// CSV output

inline void write_norms_csv_header(std::ostream& os) {
  os << "# acflow norms v1\n";
  os << "n,t,k,eps,norm_u,norm_p,norm_div,picard_iters,krylov_iters,err_u,err_p\n";
}

inline void write_ledger_csv_header(std::ostream& os) {
  os << "# acflow ledger v1\n";
  os << "n,t,k,eps,scheme,kinetic_start,kinetic_end,pressure_start,pressure_end,jump_u,jump_p,jump_p_alt,"
        "viscous,work,continuity_work,eps_source,residual,relative_residual\n";
}

inline void write_ledger_csv_row(std::ostream& os, const EnergyLedger& L, double t, double k, double eps) {
  os.precision(17);
  os << L.n << ',' << t << ',' << k << ',' << eps << ',' << (L.standard ? "standard" : "new") << ','
     << L.kinetic_start << ',' << L.kinetic_end << ',' << L.pressure_start << ',' << L.pressure_end << ','
     << L.jump_u << ',' << L.jump_p << ',' << L.jump_p_alt << ',' << L.viscous << ',' << L.work << ','
     << L.continuity_work << ',' << L.eps_source << ',' << L.residual << ',' << L.relative_residual() << '\n';
}

}  // namespace acflow
