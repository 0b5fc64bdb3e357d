#pragma once

// One time step of the artificial-compression schemes.
//
// All schemes are implemented in pressure-eliminated form. With a continuity
// source g (zero unless a manufactured solution needs it) the pressure update
// is always
//
//     p_{n+1} = a_p p_n + b (g - div u_{n+1}),
//
// standard:  a_p = 1,                       b = k / eps_{n+1}
// new/BDF2:  a_p = 2 eps_n/(eps_n+eps_{n+1}), b = 2k/(eps_n+eps_{n+1})
//
// so the momentum equation carries the grad-div term -b grad div u_{n+1} and
// the explicit pressure term a_p grad p_n. The velocity solve
//
//     (alpha I - nu Lap - b grad div) u = rhs - N(u_m; u_m)
//
// is SPD. Picard iteration freezes the advecting velocity w = u_m and keeps
// the advected one implicit, (A + N(w; .)) u_{m+1} = rhs, solved by GMRES.
// The lagged variant moves all of N(u_m; u_m) to the right-hand side so each
// solve is the SPD one (CG); it reaches the same fixed point when it converges.

#include <cmath>
#include <optional>
#include <string>

#include "acflow/errors.hpp"
#include "acflow/grid.hpp"
#include "acflow/krylov.hpp"
#include "acflow/nonlinearity.hpp"

namespace acflow {

enum class Scheme { Standard, New, Bdf2New };

inline std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::Standard: return "standard";
    case Scheme::New: return "new";
    case Scheme::Bdf2New: return "bdf2_new";
  }
  return "?";
}

inline Scheme scheme_from_string(const std::string& s) {
  if (s == "standard") return Scheme::Standard;
  if (s == "new") return Scheme::New;
  if (s == "bdf2_new") return Scheme::Bdf2New;
  throw ContractViolation("unknown scheme '" + s + "'");
}

/// Temporal order of the momentum discretisation; eps is tied to k^order.
inline int scheme_order(Scheme s) { return s == Scheme::Bdf2New ? 2 : 1; }

enum class Linearization { Picard, Lagged };

inline std::string to_string(Linearization l) { return l == Linearization::Picard ? "picard" : "lagged"; }

inline Linearization linearization_from_string(const std::string& s) {
  if (s == "picard") return Linearization::Picard;
  if (s == "lagged") return Linearization::Lagged;
  throw ContractViolation("unknown linearization '" + s + "'");
}

struct SolverParams {
  double picard_tol = 1e-10;
  int picard_max = 200;
  double krylov_tol = 1e-12;
  int krylov_max = 20000;
  Linearization linearization = Linearization::Picard;
  int gmres_restart = 20;

  void validate() const {
    require(picard_tol > 0.0 && picard_tol < 1.0, "SolverParams: picard_tol must lie in (0,1)");
    require(krylov_tol > 0.0 && krylov_tol < 1.0, "SolverParams: krylov_tol must lie in (0,1)");
    require(picard_max >= 1 && krylov_max >= 1, "SolverParams: iteration limits must be >= 1");
    require(gmres_restart >= 1, "SolverParams: gmres_restart must be >= 1");
  }
};

struct StepInputs {
  VectorField u_n;
  ScalarField p_n;
  std::optional<VectorField> u_nm1;  // BDF2 only
  double k_n = 0.0;                  // previous step size, BDF2 only
  double eps_n = 0.0;
  double eps_np1 = 0.0;
  double k_np1 = 0.0;
  VectorField f_np1;
  std::optional<ScalarField> g_np1;  // continuity source, zero when absent
  double nu = 0.0;
  std::optional<VectorField> guess;  // first Picard iterate; u_n when absent

  void validate() const {
    require(eps_n > 0.0 && eps_np1 > 0.0, "StepInputs: eps must be positive");
    require(k_np1 > 0.0, "StepInputs: time step must be positive");
    require(nu > 0.0, "StepInputs: viscosity must be positive");
    check_same_grid(u_n.grid, p_n.grid, "StepInputs");
    check_same_grid(u_n.grid, f_np1.grid, "StepInputs");
    if (g_np1) check_same_grid(u_n.grid, g_np1->grid, "StepInputs");
    if (u_nm1) check_same_grid(u_n.grid, u_nm1->grid, "StepInputs");
    if (guess) check_same_grid(u_n.grid, guess->grid, "StepInputs");
  }
};

struct StepResult {
  VectorField u_np1;
  ScalarField p_np1;
  int picard_iters = 0;
  int krylov_iters_total = 0;
  double final_picard_residual = 0.0;
};

/// alpha I - nu Lap - gamma grad div
struct HelmholtzOperator {
  double alpha = 1.0;
  double nu = 0.0;
  double gamma = 0.0;
};

struct HelmholtzSolution {
  VectorField u;
  int iterations = 0;
  double relative_residual = 0.0;
};

namespace detail {

struct HelmholtzWorkspace {
  ScalarField div;
  VectorField grad;
  explicit HelmholtzWorkspace(const GridSpec& g) : div(g), grad(g) {}
};

inline void helmholtz_apply(const HelmholtzOperator& op, const VectorField& u, VectorField& out,
                            HelmholtzWorkspace& ws) {
  laplacian_into(u, out);
  divergence_into(u, ws.div);
  gradient_into(ws.div, ws.grad);
  const double a = op.alpha, nu = op.nu, gm = op.gamma;
  for (std::size_t k = 0; k < out.ux.size(); ++k) out.ux[k] = a * u.ux[k] - nu * out.ux[k] - gm * ws.grad.ux[k];
  for (std::size_t k = 0; k < out.uy.size(); ++k) out.uy[k] = a * u.uy[k] - nu * out.uy[k] - gm * ws.grad.uy[k];
  // Normal boundary faces: Lap and grad output zero there, so out = alpha * u = 0
  // for admissible input; the duplicate periodic faces are kept in sync.
  sync_periodic(out);
}

}  // namespace detail

inline VectorField helmholtz_apply(const HelmholtzOperator& op, const VectorField& u) {
  VectorField out(u.grid);
  detail::HelmholtzWorkspace ws(u.grid);
  detail::helmholtz_apply(op, u, out, ws);
  return out;
}

/// Solve (alpha I - nu Lap - gamma grad div) u = rhs by CG, starting from
/// `guess` when given. rhs is made admissible (apply_bc) first.
inline HelmholtzSolution helmholtz_solve(const HelmholtzOperator& op, const VectorField& rhs,
                                         const SolverParams& params,
                                         const std::optional<VectorField>& guess = std::nullopt) {
  require(op.alpha > 0.0, "helmholtz_solve: alpha must be positive");
  require(op.nu >= 0.0 && op.gamma >= 0.0, "helmholtz_solve: nu and gamma must be non-negative");
  params.validate();
  const VectorField b = apply_bc(rhs);
  HelmholtzSolution sol;
  sol.u = guess ? apply_bc(*guess) : VectorField(rhs.grid);
  check_same_grid(sol.u.grid, b.grid, "helmholtz_solve");
  detail::HelmholtzWorkspace ws(b.grid);
  auto apply = [&](const VectorField& x, VectorField& out) { detail::helmholtz_apply(op, x, out, ws); };
  const CgReport rep = conjugate_gradient(apply, b, sol.u, params.krylov_tol, params.krylov_max);
  sol.iterations = rep.iterations;
  sol.relative_residual = rep.relative_residual;
  return sol;
}

/// Coefficients of the eliminated pressure update p_{n+1} = a_p p_n + b (g - div u).
struct PressureUpdate {
  double a_p = 1.0;
  double b = 0.0;
};

inline PressureUpdate pressure_update_coefficients(Scheme scheme, double eps_n, double eps_np1, double k) {
  if (scheme == Scheme::Standard) return {1.0, k / eps_np1};
  const double s = eps_n + eps_np1;
  return {2.0 * eps_n / s, 2.0 * k / s};
}

/// Variable-step BDF2 weights: (c0 u_{n+1} + c1 u_n + c2 u_{n-1}) / k_{n+1}.
struct Bdf2Weights {
  double c0, c1, c2;
};

inline Bdf2Weights bdf2_weights(double tau) {
  return {(2.0 * tau + 1.0) / (tau + 1.0), -(tau + 1.0), tau * tau / (tau + 1.0)};
}

/// Shared implementation of all three schemes.
inline StepResult advance(const StepInputs& in, const SolverParams& params, NonlinearityForm form, Scheme scheme) {
  in.validate();
  params.validate();
  const GridSpec& g = in.u_n.grid;
  const double k = in.k_np1;
  const PressureUpdate pu = pressure_update_coefficients(scheme, in.eps_n, in.eps_np1, k);

  // Explicit part of the momentum right-hand side.
  HelmholtzOperator op{1.0 / k, in.nu, pu.b};
  VectorField rhs = in.u_n;
  if (scheme == Scheme::Bdf2New) {
    if (!in.u_nm1 || !(in.k_n > 0.0)) throw MissingHistory("bdf2_new: needs u_{n-1} and k_n");
    const Bdf2Weights w = bdf2_weights(k / in.k_n);
    op.alpha = w.c0 / k;
    rhs = linear_combination(-w.c1 / k, in.u_n, -w.c2 / k, *in.u_nm1);
  } else {
    scale(1.0 / k, rhs);
  }
  axpy(1.0, in.f_np1, rhs);
  {
    ScalarField explicit_p = in.p_n;
    scale(pu.a_p, explicit_p);
    if (in.g_np1) axpy(pu.b, *in.g_np1, explicit_p);
    axpy(-1.0, gradient(explicit_p), rhs);
  }
  apply_bc_inplace(rhs);

  StepResult res;
  VectorField iterate = apply_bc(in.guess ? *in.guess : in.u_n);
  VectorField conv(g), b(g);
  detail::HelmholtzWorkspace ws(g);
  auto apply = [&](const VectorField& x, VectorField& out) { detail::helmholtz_apply(op, x, out, ws); };
  auto apply_picard = [&](const VectorField& x, VectorField& out) {
    detail::helmholtz_apply(op, x, out, ws);
    convective_into(form, iterate, x, conv);
    axpy(1.0, conv, out);
  };

  bool converged = false;
  while (res.picard_iters < params.picard_max) {
    VectorField next = iterate;
    CgReport rep;
    if (params.linearization == Linearization::Lagged) {
      convective_into(form, iterate, iterate, conv);
      b = rhs;
      axpy(-1.0, conv, b);
      rep = conjugate_gradient(apply, b, next, params.krylov_tol, params.krylov_max);
    } else {
      rep = gmres(apply_picard, rhs, next, params.krylov_tol, params.krylov_max, params.gmres_restart);
    }
    res.krylov_iters_total += rep.iterations;
    ++res.picard_iters;

    VectorField delta = next;
    axpy(-1.0, iterate, delta);
    const double dn = l2norm(delta), nn = l2norm(next);
    res.final_picard_residual = nn > 0.0 ? dn / nn : (dn > 0.0 ? 1.0 : 0.0);
    iterate = std::move(next);
    if (!std::isfinite(res.final_picard_residual)) break;
    if (res.final_picard_residual <= params.picard_tol) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw PicardDiverged("Picard iteration: relative update " + std::to_string(res.final_picard_residual) +
                         " above tolerance after " + std::to_string(res.picard_iters) + " iterations");

  res.u_np1 = std::move(iterate);
  res.p_np1 = in.p_n;
  scale(pu.a_p, res.p_np1);
  ScalarField source = divergence(res.u_np1);
  scale(-1.0, source);
  if (in.g_np1) axpy(1.0, *in.g_np1, source);
  axpy(pu.b, source, res.p_np1);
  return res;
}

/// Standard AC method: eps_{n+1} (p_{n+1} - p_n)/k + div u_{n+1} = g.
inline StepResult step_standard(const StepInputs& in, const SolverParams& params, NonlinearityForm form) {
  return advance(in, params, form, Scheme::Standard);
}

/// Variable-eps method: 1/2 (eps_{n+1} p_{n+1} - eps_n p_n)/k + eps_n/2 (p_{n+1} - p_n)/k + div u_{n+1} = g.
inline StepResult step_new(const StepInputs& in, const SolverParams& params, NonlinearityForm form) {
  return advance(in, params, form, Scheme::New);
}

/// Variable-step BDF2 momentum with the variable-eps continuity equation.
inline StepResult step_bdf2_new(const StepInputs& in, const SolverParams& params, NonlinearityForm form) {
  return advance(in, params, form, Scheme::Bdf2New);
}

struct StokesSolution {
  VectorField u;
  ScalarField p;
  int outer_iterations = 0;
  double relative_divergence = 0.0;  // ||div u|| / ||grad u||
};

/// Stationary Stokes problem -nu Lap u + grad p = f, div u = 0 on a no-slip
/// grid by augmented-Lagrangian Uzawa iteration with grad-div weight
/// gamma = gamma_factor * nu. Pressure has zero mean.
inline StokesSolution stokes_solve(const VectorField& f, double nu, const SolverParams& params,
                                   double div_tol = 1e-10, double gamma_factor = 100.0, int max_outer = 200) {
  require(!f.grid.periodic(), "stokes_solve: needs no-slip boundaries");
  require(nu > 0.0 && gamma_factor > 0.0, "stokes_solve: nu and gamma_factor must be positive");
  params.validate();
  const GridSpec& g = f.grid;
  const HelmholtzOperator op{0.0, nu, gamma_factor * nu};
  detail::HelmholtzWorkspace ws(g);
  auto apply = [&](const VectorField& x, VectorField& out) { detail::helmholtz_apply(op, x, out, ws); };
  StokesSolution sol;
  sol.u = VectorField(g);
  sol.p = ScalarField(g);
  while (sol.outer_iterations < max_outer) {
    VectorField rhs = f;
    axpy(-1.0, gradient(sol.p), rhs);
    apply_bc_inplace(rhs);
    conjugate_gradient(apply, rhs, sol.u, params.krylov_tol, params.krylov_max);
    const ScalarField div = divergence(sol.u);
    axpy(-op.gamma, div, sol.p);
    ++sol.outer_iterations;
    const double scale_u = std::sqrt(grad_norm_sq(sol.u));
    sol.relative_divergence = scale_u > 0.0 ? l2norm(div) / scale_u : 0.0;
    if (sol.relative_divergence <= div_tol) return sol;
  }
  throw PicardDiverged("stokes_solve: divergence " + std::to_string(sol.relative_divergence) +
                       " above tolerance after " + std::to_string(max_outer) + " Uzawa iterations");
}

/// Residual of the variable-eps continuity equation at a computed step.
inline ScalarField continuity_residual_new(const ScalarField& p_n, const ScalarField& p_np1, const VectorField& u_np1,
                                           double eps_n, double eps_np1, double k,
                                           const std::optional<ScalarField>& g = std::nullopt) {
  ScalarField r = divergence(u_np1);
  for (std::size_t i = 0; i < r.values.size(); ++i) {
    const double pn = p_n.values[i], pp = p_np1.values[i];
    r.values[i] += (0.5 * (eps_np1 * pp - eps_n * pn) + 0.5 * eps_n * (pp - pn)) / k;
    if (g) r.values[i] -= g->values[i];
  }
  return r;
}

}  // namespace acflow
