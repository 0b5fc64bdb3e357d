#pragma once

// Linear acoustic sub-models on a periodic grid:
//   system:  u_t + grad p = 0,  eps(t) p_t + div u = 0
//   scalar:  (eps(t) p_t)_t - Lap p = 0, carried as (p, q = eps p_t)
// Both are advanced by the implicit midpoint rule.

#include <cmath>
#include <functional>
#include <numbers>
#include <ostream>

#include "acflow/errors.hpp"
#include "acflow/grid.hpp"
#include "acflow/krylov.hpp"
#include "acflow/stepper.hpp"

namespace acflow {

using EpsFn = std::function<double(double)>;

struct AcousticSystemState {
  VectorField u;
  ScalarField p;
  double t = 0.0;
};

struct AcousticWaveState {
  ScalarField p;
  ScalarField q;  // eps(t) p_t
  double t = 0.0;
};

/// Cell-centred Laplacian div(grad p).
inline ScalarField scalar_laplacian(const ScalarField& p) { return divergence(gradient(p)); }

namespace detail {

inline void require_periodic(const GridSpec& g, const char* where) {
  if (!g.periodic()) throw ContractViolation(std::string(where) + ": acoustic sub-models need periodic boundaries");
}

// Solve (c I - d Lap) x = b by CG; c > 0, d >= 0.
inline ScalarField shifted_poisson_solve(double c, double d, const ScalarField& b, const ScalarField& guess,
                                         const SolverParams& params) {
  ScalarField x = guess;
  ScalarField lap(b.grid);
  VectorField grad(b.grid);
  auto apply = [&](const ScalarField& v, ScalarField& out) {
    gradient_into(v, grad);
    divergence_into(grad, lap);
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = c * v.values[i] - d * lap.values[i];
  };
  conjugate_gradient(apply, b, x, params.krylov_tol, params.krylov_max);
  return x;
}

}  // namespace detail

/// One implicit-midpoint step of the first-order system; eps is evaluated at
/// the step midpoint.
inline AcousticSystemState acoustic_step(const AcousticSystemState& s, const EpsFn& eps, double k,
                                         const SolverParams& params = {}) {
  require(k > 0.0, "acoustic_step: k must be positive");
  detail::require_periodic(s.u.grid, "acoustic_step");
  check_same_grid(s.u.grid, s.p.grid, "acoustic_step");
  const double em = eps(s.t + 0.5 * k);
  require(em > 0.0, "acoustic_step: eps must be positive");

  // (em/k - k/4 Lap) p1 = (em/k + k/4 Lap) p0 - div u0
  ScalarField rhs = scalar_laplacian(s.p);
  scale(0.25 * k, rhs);
  axpy(em / k, s.p, rhs);
  axpy(-1.0, divergence(s.u), rhs);
  AcousticSystemState out;
  out.p = detail::shifted_poisson_solve(em / k, 0.25 * k, rhs, s.p, params);

  ScalarField psum = s.p;
  axpy(1.0, out.p, psum);
  out.u = s.u;
  axpy(-0.5 * k, gradient(psum), out.u);
  out.t = s.t + k;
  return out;
}

/// One implicit-midpoint step of the scalar wave form in (p, q) variables.
inline AcousticWaveState acoustic_step(const AcousticWaveState& s, const EpsFn& eps, double k,
                                       const SolverParams& params = {}) {
  require(k > 0.0, "acoustic_step: k must be positive");
  detail::require_periodic(s.p.grid, "acoustic_step");
  check_same_grid(s.p.grid, s.q.grid, "acoustic_step");
  const double em = eps(s.t + 0.5 * k);
  require(em > 0.0, "acoustic_step: eps must be positive");
  const double c = 0.25 * k * k / em;

  // (I - c Lap) p1 = p0 + (k/em) q0 + c Lap p0
  const ScalarField lap0 = scalar_laplacian(s.p);
  ScalarField rhs = s.p;
  axpy(k / em, s.q, rhs);
  axpy(c, lap0, rhs);
  AcousticWaveState out;
  out.p = detail::shifted_poisson_solve(1.0, c, rhs, s.p, params);

  // q1 = q0 + k/2 Lap(p0 + p1)
  ScalarField psum = s.p;
  axpy(1.0, out.p, psum);
  out.q = s.q;
  axpy(0.5 * k, scalar_laplacian(psum), out.q);
  out.t = s.t + k;
  return out;
}

/// W = int eps p_t^2 + |grad p|^2 with p_t = q / eps.
inline double wave_energy(const AcousticWaveState& s, double eps) {
  require(eps > 0.0, "wave_energy: eps must be positive");
  return inner(s.q, s.q) / eps + inner(gradient(s.p), gradient(s.p));
}

/// E = 1/2 int |u|^2 + eps p^2
inline double model_energy(const AcousticSystemState& s, double eps) {
  return 0.5 * inner(s.u, s.u) + 0.5 * eps * inner(s.p, s.p);
}

/// Rate identity over one step: (F_1 - F_0)/k against the right-hand side
/// evaluated at the step midpoint.
struct RateCheck {
  double value_start = 0.0;
  double value_end = 0.0;
  double rate = 0.0;  // (F_1 - F_0) / k
  double rhs = 0.0;
  double residual = 0.0;  // rate - rhs
};

/// dW/dt = -int eps_t p_t^2
inline RateCheck wave_energy_rate(const AcousticWaveState& s0, const AcousticWaveState& s1, const EpsFn& eps,
                                  const EpsFn& eps_t) {
  const double k = s1.t - s0.t;
  require(k > 0.0, "wave_energy_rate: states must be time-ordered");
  const double tm = 0.5 * (s0.t + s1.t);
  const double em = eps(tm);
  ScalarField pt = s0.q;
  axpy(1.0, s1.q, pt);
  scale(0.5 / em, pt);
  RateCheck r;
  r.value_start = wave_energy(s0, eps(s0.t));
  r.value_end = wave_energy(s1, eps(s1.t));
  r.rate = (r.value_end - r.value_start) / k;
  r.rhs = -eps_t(tm) * inner(pt, pt);
  r.residual = r.rate - r.rhs;
  return r;
}

/// dE/dt = 1/2 int eps_t p^2
inline RateCheck model_energy_rate(const AcousticSystemState& s0, const AcousticSystemState& s1, const EpsFn& eps,
                                   const EpsFn& eps_t) {
  const double k = s1.t - s0.t;
  require(k > 0.0, "model_energy_rate: states must be time-ordered");
  const double tm = 0.5 * (s0.t + s1.t);
  RateCheck r;
  r.value_start = model_energy(s0, eps(s0.t));
  r.value_end = model_energy(s1, eps(s1.t));
  r.rate = (r.value_end - r.value_start) / k;
  r.rhs = 0.25 * eps_t(tm) * (inner(s0.p, s0.p) + inner(s1.p, s1.p));
  r.residual = r.rate - r.rhs;
  return r;
}

/// W evaluated from three consecutive pressures alone, with the centred
/// difference p_t = (p_{n+1} - p_{n-1}) / (2k) and grad p_n.
inline double wave_energy_fd(const ScalarField& p_nm1, const ScalarField& p_n, const ScalarField& p_np1, double k,
                             double eps_n) {
  ScalarField pt = p_np1;
  axpy(-1.0, p_nm1, pt);
  scale(0.5 / k, pt);
  const VectorField gp = gradient(p_n);
  return eps_n * inner(pt, pt) + inner(gp, gp);
}

/// Standing wave cos(2 pi m x / lx) cos(omega t) for constant eps, with the
/// semi-discrete frequency omega^2 = lambda_h / eps of the grid Laplacian.
struct PlaneWave {
  int mode = 1;
  double eps = 1.0;

  double lambda_h(const GridSpec& g) const {
    const double s = std::sin(std::numbers::pi * mode * g.hx() / g.lx);
    return 4.0 * s * s / (g.hx() * g.hx());
  }
  double omega(const GridSpec& g) const { return std::sqrt(lambda_h(g) / eps); }

  ScalarField profile(const GridSpec& g) const {
    const double kx = 2.0 * std::numbers::pi * mode / g.lx;
    return sample_scalar(g, [&](double x, double) { return std::cos(kx * x); });
  }

  AcousticWaveState wave_state(const GridSpec& g, double t) const {
    const double w = omega(g);
    AcousticWaveState s;
    s.p = profile(g);
    s.q = s.p;
    scale(std::cos(w * t), s.p);
    scale(-eps * w * std::sin(w * t), s.q);
    s.t = t;
    return s;
  }

  AcousticSystemState system_state(const GridSpec& g, double t) const {
    const double w = omega(g);
    AcousticSystemState s;
    const ScalarField P = profile(g);
    s.p = P;
    scale(std::cos(w * t), s.p);
    s.u = gradient(P);
    scale(-std::sin(w * t) / w, s.u);
    s.t = t;
    return s;
  }
};

inline void write_acoustic_csv_header(std::ostream& os) {
  os << "# acflow acoustic v1\n";
  os << "n,t,k,eps,eps_t_fd,W,W_fd,E,W_rate_residual,E_rate_residual\n";
}

}  // namespace acflow
