#include <gtest/gtest.h>

#include <cmath>

#include "acflow/stepper.hpp"
#include "support/generators.hpp"
#include "support/oracle.hpp"

using namespace acflow;

namespace {

class BothBoundaries : public ::testing::TestWithParam<Boundary> {};

SolverParams tight() {
  SolverParams s;
  s.picard_tol = 1e-13;
  s.krylov_tol = 1e-13;
  return s;
}

StepInputs random_inputs(const GridSpec& g, gen::Rng& rng, double k, double eps_n, double eps_np1) {
  StepInputs in;
  in.u_n = gen::smooth_vector(g, rng);
  in.p_n = gen::smooth_scalar(g, rng);
  in.f_np1 = gen::smooth_vector(g, rng);
  scale(5.0, in.f_np1);
  in.eps_n = eps_n;
  in.eps_np1 = eps_np1;
  in.k_np1 = k;
  in.nu = 0.05;
  return in;
}

double rel_diff(const VectorField& a, const VectorField& b) {
  VectorField d = a;
  axpy(-1.0, b, d);
  return l2norm(d) / l2norm(b);
}

double rel_diff(const ScalarField& a, const ScalarField& b) {
  ScalarField d = a;
  axpy(-1.0, b, d);
  return l2norm(d) / l2norm(b);
}

}  // namespace

TEST(PressureUpdate, EliminationCoefficients) {
  const PressureUpdate s = pressure_update_coefficients(Scheme::Standard, 0.01, 0.02, 0.01);
  EXPECT_DOUBLE_EQ(s.a_p, 1.0);
  EXPECT_DOUBLE_EQ(s.b, 0.5);
  const PressureUpdate n = pressure_update_coefficients(Scheme::New, 0.01, 0.02, 0.01);
  EXPECT_DOUBLE_EQ(n.a_p, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(n.b, 2.0 / 3.0);
  const PressureUpdate c = pressure_update_coefficients(Scheme::New, 0.03, 0.03, 0.01);
  EXPECT_DOUBLE_EQ(c.a_p, 1.0);
  EXPECT_DOUBLE_EQ(c.b, 0.01 / 0.03);
}

TEST(Bdf2Weights, UniformValuesAndExactnessOnLinears) {
  const Bdf2Weights u = bdf2_weights(1.0);
  EXPECT_DOUBLE_EQ(u.c0, 1.5);
  EXPECT_DOUBLE_EQ(u.c1, -2.0);
  EXPECT_DOUBLE_EQ(u.c2, 0.5);
  gen::Rng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const double tau = rng.uniform(0.2, 5.0);
    const Bdf2Weights w = bdf2_weights(tau);
    // Nodes t_{n+1} = 1, t_n = 0, t_{n-1} = -1/tau with k_{n+1} = 1.
    EXPECT_NEAR(w.c0 + w.c1 + w.c2, 0.0, 1e-14);
    EXPECT_NEAR(w.c0 - w.c2 / tau, 1.0, 1e-14);
    EXPECT_NEAR(w.c0 + w.c2 / (tau * tau), 2.0, 1e-13);  // d/dt t^2 at t = 1
  }
}

TEST_P(BothBoundaries, HelmholtzApplyAndSolveMatchDenseAssembly) {
  gen::Rng rng(42);
  const GridSpec g(6, 6, 1.0, 1.0, GetParam());
  const oracle::Layout L(g);
  const HelmholtzOperator op{37.0, 0.3, 12.5};
  const Eigen::MatrixXd H = op.alpha * Eigen::MatrixXd::Identity(L.nu(), L.nu()) - op.nu * oracle::laplacian(L) -
                            op.gamma * oracle::gradient(L) * oracle::divergence(L);
  const VectorField u = gen::noise_vector(g, rng);
  const Eigen::VectorXd expect = H * L.pack(u);
  EXPECT_LT((L.pack(helmholtz_apply(op, u)) - expect).norm(), 1e-12 * expect.norm());

  const VectorField rhs = gen::noise_vector(g, rng);
  const Eigen::VectorXd ref = H.ldlt().solve(L.pack(rhs));
  const HelmholtzSolution sol = helmholtz_solve(op, rhs, tight());
  EXPECT_LT((L.pack(sol.u) - ref).norm(), 1e-10 * ref.norm());
}

TEST_P(BothBoundaries, EverySchemeMatchesCoupledNewtonSolve) {
  gen::Rng rng(43);
  const GridSpec g(6, 6, 1.0, 1.0, GetParam());
  const oracle::Layout L(g);
  const double k = 0.02, k_n = 0.015;
  for (Linearization lin : {Linearization::Picard, Linearization::Lagged}) {
    for (Scheme s : {Scheme::Standard, Scheme::New, Scheme::Bdf2New}) {
      StepInputs in = random_inputs(g, rng, k, 0.013, 0.021);
      in.u_nm1 = gen::smooth_vector(g, rng);
      in.k_n = k_n;
      in.g_np1 = gen::smooth_scalar(g, rng);
      SolverParams sp = tight();
      sp.linearization = lin;
      const StepResult r = advance(in, sp, NonlinearityForm::Skew, s);

      oracle::StepProblem P;
      P.u_n = L.pack(in.u_n);
      P.u_nm1 = L.pack(*in.u_nm1);
      P.p_n = L.pack(in.p_n);
      P.f = L.pack(in.f_np1);
      P.g = L.pack(*in.g_np1);
      P.k = k;
      P.k_n = k_n;
      P.eps_n = in.eps_n;
      P.eps_np1 = in.eps_np1;
      P.nu = in.nu;
      const oracle::Scheme os = s == Scheme::Standard ? oracle::Scheme::Standard
                                : s == Scheme::New    ? oracle::Scheme::New
                                                      : oracle::Scheme::Bdf2;
      const auto [u, p] = oracle::coupled_step(L, os, P);
      EXPECT_LT((L.pack(r.u_np1) - u).norm(), 1e-9 * u.norm()) << to_string(s) << ' ' << to_string(lin);
      EXPECT_LT((L.pack(r.p_np1) - p).norm(), 1e-9 * p.norm()) << to_string(s) << ' ' << to_string(lin);
    }
  }
}

TEST_P(BothBoundaries, ConstantEpsNewSchemeEqualsStandard) {
  gen::Rng rng(44);
  const GridSpec g(12, 10, 1.0, 1.0, GetParam());
  StepInputs in = random_inputs(g, rng, 0.01, 0.01, 0.01);
  in.g_np1 = gen::smooth_scalar(g, rng);
  const StepResult a = step_new(in, tight(), NonlinearityForm::Skew);
  const StepResult b = step_standard(in, tight(), NonlinearityForm::Skew);
  EXPECT_LE(rel_diff(a.u_np1, b.u_np1), 1e-12);
  EXPECT_LE(rel_diff(a.p_np1, b.p_np1), 1e-12);
}

TEST_P(BothBoundaries, NewSchemeSatisfiesItsContinuityEquation) {
  gen::Rng rng(45);
  const GridSpec g(10, 10, 1.0, 1.0, GetParam());
  StepInputs in = random_inputs(g, rng, 0.01, 0.02, 0.005);
  in.g_np1 = gen::smooth_scalar(g, rng);
  const StepResult r = step_new(in, tight(), NonlinearityForm::Skew);
  const ScalarField res = continuity_residual_new(in.p_n, r.p_np1, r.u_np1, in.eps_n, in.eps_np1, in.k_np1, in.g_np1);
  EXPECT_LT(l2norm(res), 1e-10 * l2norm(divergence(r.u_np1)) + 1e-12);
}

TEST_P(BothBoundaries, PicardAndLaggedLinearizationsReachSameFixedPoint) {
  gen::Rng rng(46);
  const GridSpec g(12, 12, 1.0, 1.0, GetParam());
  const StepInputs in = random_inputs(g, rng, 0.01, 0.01, 0.012);
  SolverParams p = tight(), l = tight();
  l.linearization = Linearization::Lagged;
  const StepResult a = step_new(in, p, NonlinearityForm::Skew);
  const StepResult b = step_new(in, l, NonlinearityForm::Skew);
  EXPECT_LE(rel_diff(a.u_np1, b.u_np1), 1e-11);
  EXPECT_LE(rel_diff(a.p_np1, b.p_np1), 1e-11);
  EXPECT_LE(a.picard_iters, b.picard_iters);
}

TEST_P(BothBoundaries, ExtrapolatedGuessDoesNotChangeTheSolution) {
  gen::Rng rng(47);
  const GridSpec g(10, 10, 1.0, 1.0, GetParam());
  StepInputs in = random_inputs(g, rng, 0.01, 0.01, 0.01);
  const StepResult a = step_new(in, tight(), NonlinearityForm::Skew);
  in.guess = gen::smooth_vector(g, rng);
  const StepResult b = step_new(in, tight(), NonlinearityForm::Skew);
  EXPECT_LE(rel_diff(a.u_np1, b.u_np1), 1e-11);
}

INSTANTIATE_TEST_SUITE_P(Stepper, BothBoundaries, ::testing::Values(Boundary::Periodic, Boundary::NoSlip),
                         [](const auto& info) { return to_string(info.param); });

TEST(StepperContracts, Bdf2WithoutHistoryThrows) {
  gen::Rng rng(48);
  const GridSpec g = unit_square(6, Boundary::Periodic);
  StepInputs in = random_inputs(g, rng, 0.01, 0.01, 0.01);
  EXPECT_THROW(step_bdf2_new(in, tight(), NonlinearityForm::Skew), MissingHistory);
  in.u_nm1 = in.u_n;
  EXPECT_THROW(step_bdf2_new(in, tight(), NonlinearityForm::Skew), MissingHistory);  // k_n unset
}

TEST(StepperContracts, RejectsDegenerateParameters) {
  gen::Rng rng(49);
  const GridSpec g = unit_square(6, Boundary::Periodic);
  const StepInputs base = random_inputs(g, rng, 0.01, 0.01, 0.01);
  StepInputs in = base;
  in.eps_np1 = 0.0;
  EXPECT_THROW(step_new(in, tight(), NonlinearityForm::Skew), ContractViolation);
  in = base;
  in.nu = 0.0;
  EXPECT_THROW(step_new(in, tight(), NonlinearityForm::Skew), ContractViolation);
  in = base;
  in.k_np1 = -1.0;
  EXPECT_THROW(step_standard(in, tight(), NonlinearityForm::Skew), ContractViolation);
  in = base;
  in.f_np1 = VectorField(unit_square(7, Boundary::Periodic));
  EXPECT_THROW(step_new(in, tight(), NonlinearityForm::Skew), ContractViolation);
  SolverParams bad = tight();
  bad.picard_tol = 0.0;
  EXPECT_THROW(step_new(base, bad, NonlinearityForm::Skew), ContractViolation);
}

TEST(StepperContracts, PicardBudgetExhaustionThrows) {
  gen::Rng rng(50);
  const GridSpec g = unit_square(8, Boundary::Periodic);
  const StepInputs in = random_inputs(g, rng, 0.01, 0.01, 0.01);
  SolverParams p = tight();
  p.picard_max = 1;
  EXPECT_THROW(step_new(in, p, NonlinearityForm::Skew), PicardDiverged);
}

TEST(Stokes, MatchesDenseSaddlePointSolve) {
  gen::Rng rng(51);
  const GridSpec g(6, 6, 1.0, 1.0, Boundary::NoSlip);
  const oracle::Layout L(g);
  const double nu = 0.2;
  const VectorField f = gen::smooth_vector(g, rng);

  // [-nu Lap, G; D, 0; 0, mean] with the mean constraint appended as a row.
  const int nu_ = L.nu(), np = L.np();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(nu_ + np + 1, nu_ + np);
  K.topLeftCorner(nu_, nu_) = -nu * oracle::laplacian(L);
  K.block(0, nu_, nu_, np) = oracle::gradient(L);
  K.block(nu_, 0, np, nu_) = oracle::divergence(L);
  K.block(nu_ + np, nu_, 1, np).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nu_ + np + 1);
  rhs.head(nu_) = L.pack(f);
  const Eigen::VectorXd z = K.colPivHouseholderQr().solve(rhs);

  const StokesSolution s = stokes_solve(f, nu, tight(), 1e-12);
  EXPECT_LT((L.pack(s.u) - z.head(nu_)).norm(), 1e-8 * z.head(nu_).norm());
  Eigen::VectorXd p = L.pack(s.p);
  p.array() -= p.mean();
  EXPECT_LT((p - z.tail(np)).norm(), 1e-8 * z.tail(np).norm());
  EXPECT_LE(s.relative_divergence, 1e-12);
}

TEST(Stokes, RequiresNoSlipBoundaries) {
  const VectorField f(unit_square(6, Boundary::Periodic));
  EXPECT_THROW(stokes_solve(f, 1.0, tight()), ContractViolation);
}

TEST(SchemeNames, RoundTrip) {
  for (Scheme s : {Scheme::Standard, Scheme::New, Scheme::Bdf2New}) EXPECT_EQ(scheme_from_string(to_string(s)), s);
  for (Linearization l : {Linearization::Picard, Linearization::Lagged})
    EXPECT_EQ(linearization_from_string(to_string(l)), l);
  EXPECT_THROW(scheme_from_string("rk4"), Error);
}
