#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "acflow/krylov.hpp"
#include "support/generators.hpp"

using namespace acflow;

namespace {

const GridSpec kGrid = unit_square(6, Boundary::Periodic);

Eigen::VectorXd to_eigen(const ScalarField& f) { return Eigen::Map<const Eigen::VectorXd>(f.values.data(), f.values.size()); }

ScalarField from_eigen(const Eigen::VectorXd& v) {
  ScalarField f(kGrid);
  for (int i = 0; i < v.size(); ++i) f.values[i] = v[i];
  return f;
}

auto matrix_apply(const Eigen::MatrixXd& A) {
  return [&A](const ScalarField& x, ScalarField& out) { out = from_eigen(A * to_eigen(x)); };
}

Eigen::MatrixXd random_matrix(gen::Rng& rng, int n) {
  Eigen::MatrixXd M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M(i, j) = rng.uniform();
  return M;
}

Eigen::MatrixXd random_spd(gen::Rng& rng, int n) {
  const Eigen::MatrixXd M = random_matrix(rng, n);
  return M.transpose() * M + 0.5 * Eigen::MatrixXd::Identity(n, n);
}

}  // namespace

TEST(ConjugateGradient, MatchesDenseSolveForSpdMatrices) {
  gen::Rng rng(31);
  const int n = static_cast<int>(kGrid.cells());
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::MatrixXd A = random_spd(rng, n);
    const ScalarField b = gen::noise_scalar(kGrid, rng);
    ScalarField x(kGrid);
    const CgReport rep = conjugate_gradient(matrix_apply(A), b, x, 1e-13, 2000);
    const Eigen::VectorXd ref = A.ldlt().solve(to_eigen(b));
    EXPECT_LT((to_eigen(x) - ref).norm(), 1e-9 * ref.norm());
    EXPECT_LE(rep.relative_residual, 1e-13);
    EXPECT_GT(rep.iterations, 0);
  }
}

TEST(Gmres, MatchesDenseSolveForNonsymmetricMatrices) {
  gen::Rng rng(32);
  const int n = static_cast<int>(kGrid.cells());
  for (int restart : {3, 10, 60}) {
    const Eigen::MatrixXd S = random_matrix(rng, n);
    const Eigen::MatrixXd A = 4.0 * n * Eigen::MatrixXd::Identity(n, n) + (S - S.transpose()) * 3.0 + S;
    const ScalarField b = gen::noise_scalar(kGrid, rng);
    ScalarField x = gen::noise_scalar(kGrid, rng);
    const CgReport rep = gmres(matrix_apply(A), b, x, 1e-13, 5000, restart);
    const Eigen::VectorXd ref = A.partialPivLu().solve(to_eigen(b));
    EXPECT_LT((to_eigen(x) - ref).norm(), 1e-10 * ref.norm()) << "restart " << restart;
    EXPECT_LE(rep.relative_residual, 1e-13);
  }
}

TEST(Gmres, FullRestartConvergesWithinDimension) {
  gen::Rng rng(33);
  const int n = static_cast<int>(kGrid.cells());
  const Eigen::MatrixXd A = random_matrix(rng, n) + n * Eigen::MatrixXd::Identity(n, n);
  const ScalarField b = gen::noise_scalar(kGrid, rng);
  ScalarField x(kGrid);
  const CgReport rep = gmres(matrix_apply(A), b, x, 1e-12, 1000, n);
  EXPECT_LE(rep.iterations, n);
}

TEST(Krylov, ZeroRightHandSideGivesZeroSolution) {
  gen::Rng rng(34);
  const Eigen::MatrixXd A = random_spd(rng, static_cast<int>(kGrid.cells()));
  const ScalarField b(kGrid);
  ScalarField x = gen::noise_scalar(kGrid, rng);
  EXPECT_EQ(conjugate_gradient(matrix_apply(A), b, x, 1e-12, 10).iterations, 0);
  EXPECT_EQ(l2norm(x), 0.0);
  x = gen::noise_scalar(kGrid, rng);
  EXPECT_EQ(gmres(matrix_apply(A), b, x, 1e-12, 10).iterations, 0);
  EXPECT_EQ(l2norm(x), 0.0);
}

TEST(Krylov, ThrowsOnIterationBudgetOrIndefiniteOperator) {
  gen::Rng rng(35);
  const int n = static_cast<int>(kGrid.cells());
  const Eigen::MatrixXd A = random_spd(rng, n);
  const ScalarField b = gen::noise_scalar(kGrid, rng);
  ScalarField x(kGrid);
  EXPECT_THROW(conjugate_gradient(matrix_apply(A), b, x, 1e-14, 2), KrylovBreakdown);
  x = ScalarField(kGrid);
  EXPECT_THROW(gmres(matrix_apply(A), b, x, 1e-14, 2, 1), KrylovBreakdown);

  const Eigen::MatrixXd neg = -Eigen::MatrixXd::Identity(n, n);
  x = ScalarField(kGrid);
  EXPECT_THROW(conjugate_gradient(matrix_apply(neg), b, x, 1e-12, 100), KrylovBreakdown);
}
