#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "acflow/grid.hpp"
#include "support/generators.hpp"
#include "support/oracle.hpp"

using namespace acflow;

namespace {

constexpr double kPi = std::numbers::pi;

class BothBoundaries : public ::testing::TestWithParam<Boundary> {};

GridSpec rect(int nx, int ny, Boundary bc) { return GridSpec(nx, ny, 1.3, 0.9, bc); }

}  // namespace

TEST_P(BothBoundaries, GradientIsMinusAdjointOfDivergence) {
  gen::Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const GridSpec g = rect(rng.integer(4, 17), rng.integer(4, 17), GetParam());
    const ScalarField p = gen::noise_scalar(g, rng);
    const VectorField u = gen::noise_vector(g, rng);
    const double lhs = inner(gradient(p), u);
    const double rhs = -inner(p, divergence(u));
    EXPECT_NEAR(lhs, rhs, 1e-12 * (std::abs(lhs) + l2norm(gradient(p)) * l2norm(u)));
  }
}

TEST_P(BothBoundaries, LaplacianIsSymmetric) {
  gen::Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const GridSpec g = rect(rng.integer(4, 17), rng.integer(4, 17), GetParam());
    const VectorField u = gen::noise_vector(g, rng), v = gen::noise_vector(g, rng);
    const double a = inner(laplacian(u), v), b = inner(u, laplacian(v));
    EXPECT_NEAR(a, b, 1e-12 * l2norm(laplacian(u)) * l2norm(v));
  }
}

TEST_P(BothBoundaries, GradNormSqMatchesLaplacianEnergy) {
  gen::Rng rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const GridSpec g = rect(rng.integer(4, 13), rng.integer(4, 13), GetParam());
    const VectorField u = gen::noise_vector(g, rng);
    const double e = grad_norm_sq(u);
    EXPECT_GT(e, 0.0);
    EXPECT_NEAR(e, -inner(laplacian(u), u), 1e-12 * e);
  }
}

TEST_P(BothBoundaries, GradDivIsGradientOfDivergenceBitwise) {
  gen::Rng rng(14);
  const GridSpec g = rect(9, 7, GetParam());
  const VectorField u = gen::noise_vector(g, rng);
  const VectorField a = grad_div(u), b = gradient(divergence(u));
  EXPECT_EQ(a.ux, b.ux);
  EXPECT_EQ(a.uy, b.uy);
}

TEST_P(BothBoundaries, OperatorsMatchDenseAssembly) {
  gen::Rng rng(15);
  const GridSpec g = rect(6, 5, GetParam());
  const oracle::Layout L(g);
  const VectorField u = gen::noise_vector(g, rng);
  const ScalarField p = gen::noise_scalar(g, rng);
  const Eigen::VectorXd z = L.pack(u), q = L.pack(p);

  const Eigen::VectorXd div = oracle::divergence(L) * z;
  const Eigen::VectorXd grad = oracle::gradient(L) * q;
  const Eigen::VectorXd lap = oracle::laplacian(L) * z;
  EXPECT_LT((L.pack(divergence(u)) - div).norm(), 1e-12 * div.norm());
  EXPECT_LT((L.pack(gradient(p)) - grad).norm(), 1e-12 * grad.norm());
  EXPECT_LT((L.pack(laplacian(u)) - lap).norm(), 1e-12 * lap.norm());
}

TEST_P(BothBoundaries, OperatorOutputsRespectBoundaryConditions) {
  gen::Rng rng(16);
  const GridSpec g = rect(7, 6, GetParam());
  for (const VectorField& v : {gradient(gen::noise_scalar(g, rng)), laplacian(gen::noise_vector(g, rng))}) {
    const VectorField w = apply_bc(v);
    EXPECT_EQ(v.ux, w.ux);
    EXPECT_EQ(v.uy, w.uy);
  }
}

INSTANTIATE_TEST_SUITE_P(Grid, BothBoundaries, ::testing::Values(Boundary::Periodic, Boundary::NoSlip),
                         [](const auto& info) { return to_string(info.param); });

namespace {

// Max-norm error of each operator against its exact counterpart for a smooth
// periodic field on an n x n unit-square grid.
struct OperatorErrors {
  double div, grad, lap;
};

OperatorErrors periodic_errors(int n) {
  const GridSpec g = unit_square(n, Boundary::Periodic);
  const double a = 2 * kPi, b = 4 * kPi;
  auto fx = [&](double x, double y) { return std::sin(a * x) * std::cos(b * y); };
  auto fy = [&](double x, double y) { return std::cos(a * x + 0.3) * std::sin(a * y); };
  auto ph = [&](double x, double y) { return std::sin(a * x) * std::sin(b * y + 0.7); };

  const VectorField u = sample_vector(g, fx, fy);
  const ScalarField div_exact = sample_scalar(g, [&](double x, double y) {
    return a * std::cos(a * x) * std::cos(b * y) + a * std::cos(a * x + 0.3) * std::cos(a * y);
  });
  const VectorField grad_exact =
      sample_vector(g, [&](double x, double y) { return a * std::cos(a * x) * std::sin(b * y + 0.7); },
                    [&](double x, double y) { return b * std::sin(a * x) * std::cos(b * y + 0.7); });
  const VectorField lap_exact = sample_vector(
      g, [&](double x, double y) { return -(a * a + b * b) * fx(x, y); },
      [&](double x, double y) { return -2 * a * a * fy(x, y); });

  auto maxdiff = [](const std::vector<double>& x, const std::vector<double>& y) {
    double m = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(x[i] - y[i]));
    return m;
  };
  OperatorErrors e{};
  e.div = maxdiff(divergence(u).values, div_exact.values);
  const VectorField gp = gradient(sample_scalar(g, ph));
  e.grad = std::max(maxdiff(gp.ux, grad_exact.ux), maxdiff(gp.uy, grad_exact.uy));
  const VectorField lu = laplacian(u);
  e.lap = std::max(maxdiff(lu.ux, lap_exact.ux), maxdiff(lu.uy, lap_exact.uy));
  return e;
}

}  // namespace

TEST(GridAccuracy, OperatorsAreSecondOrderOnSmoothPeriodicFields) {
  const OperatorErrors c = periodic_errors(32), f = periodic_errors(64);
  for (auto [coarse, fine] : {std::pair{c.div, f.div}, {c.grad, f.grad}, {c.lap, f.lap}}) {
    const double ratio = coarse / fine;
    EXPECT_GE(ratio, 3.5);
    EXPECT_LE(ratio, 4.5);
  }
}

TEST(GridBoundary, NoSlipZeroesNormalFacesAndPeriodicSyncsDuplicates) {
  gen::Rng rng(17);
  const GridSpec ns = unit_square(5, Boundary::NoSlip);
  VectorField u(ns);
  for (double& v : u.ux) v = rng.uniform();
  for (double& v : u.uy) v = rng.uniform();
  apply_bc_inplace(u);
  for (int j = 0; j < ns.ny; ++j) {
    EXPECT_EQ(u.x(0, j), 0.0);
    EXPECT_EQ(u.x(ns.nx, j), 0.0);
  }
  for (int i = 0; i < ns.nx; ++i) {
    EXPECT_EQ(u.y(i, 0), 0.0);
    EXPECT_EQ(u.y(i, ns.ny), 0.0);
  }

  const GridSpec pg = unit_square(5, Boundary::Periodic);
  VectorField w(pg);
  for (double& v : w.ux) v = rng.uniform();
  for (double& v : w.uy) v = rng.uniform();
  apply_bc_inplace(w);
  for (int j = 0; j < pg.ny; ++j) EXPECT_EQ(w.x(0, j), w.x(pg.nx, j));
  for (int i = 0; i < pg.nx; ++i) EXPECT_EQ(w.y(i, 0), w.y(i, pg.ny));
}

TEST(GridInner, FixedOrderReductionMatchesExtendedPrecisionSum) {
  gen::Rng rng(18);
  const GridSpec g = rect(23, 19, Boundary::Periodic);
  const ScalarField a = gen::noise_scalar(g, rng), b = gen::noise_scalar(g, rng);
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.values.size(); ++i) s += static_cast<long double>(a.values[i]) * b.values[i];
  EXPECT_NEAR(inner(a, b), static_cast<double>(s * g.cell_area()), 1e-13);
  EXPECT_EQ(inner(a, b), inner(a, b));
}

TEST(GridSnapshot, RoundTripIsExact) {
  gen::Rng rng(19);
  for (Boundary bc : {Boundary::Periodic, Boundary::NoSlip}) {
    const GridSpec g = rect(7, 5, bc);
    const ScalarField p = gen::noise_scalar(g, rng);
    const VectorField u = gen::noise_vector(g, rng);
    std::stringstream sp, su;
    write_snapshot(sp, p);
    write_snapshot(su, u);
    const ScalarField p2 = read_scalar_snapshot(sp);
    const VectorField u2 = read_vector_snapshot(su);
    EXPECT_EQ(p2.grid, g);
    EXPECT_EQ(p2.values, p.values);
    EXPECT_EQ(u2.ux, u.ux);
    EXPECT_EQ(u2.uy, u.uy);
  }
}

TEST(GridSnapshot, RejectsMalformedInput) {
  std::stringstream bad_tag("FOO scalar 4 4 1 1 periodic\n");
  EXPECT_THROW(read_scalar_snapshot(bad_tag), ContractViolation);

  std::stringstream wrong_kind("FIELD vector 4 4 1 1 periodic\n");
  EXPECT_THROW(read_scalar_snapshot(wrong_kind), ContractViolation);

  std::stringstream truncated("FIELD scalar 4 4 1 1 periodic\n1\n2\n");
  EXPECT_THROW(read_scalar_snapshot(truncated), ContractViolation);
}

TEST(GridContracts, RejectsBadGeometryAndMismatchedFields) {
  EXPECT_THROW(GridSpec(3, 8, 1.0, 1.0, Boundary::Periodic), ContractViolation);
  EXPECT_THROW(GridSpec(8, 8, 0.0, 1.0, Boundary::Periodic), ContractViolation);
  const ScalarField a(unit_square(4, Boundary::Periodic)), b(unit_square(5, Boundary::Periodic));
  EXPECT_THROW(inner(a, b), ContractViolation);
  EXPECT_THROW(boundary_from_string("slip"), ContractViolation);
}
