#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "insider_sim/errors.hpp"
#include "insider_sim/riccati.hpp"

using namespace insider_sim;

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

Matrix gauss(std::mt19937_64& g, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> d;
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = d(g);
  return m;
}

Matrix spd(std::mt19937_64& g, Eigen::Index n) {
  const Matrix a = gauss(g, n, n);
  return a * a.transpose() + 0.1 * Matrix::Identity(n, n);
}

}  // namespace

TEST(Care, ScalarIntegrator) {
  const CareSolution s = solve_care({scalar(0), scalar(1), scalar(1), scalar(1)});
  EXPECT_NEAR(s.P(0, 0), 1.0, 1e-10);
  EXPECT_NEAR(s.K(0, 0), 1.0, 1e-10);
}

TEST(Care, ScalarUnstable) {
  const CareSolution s = solve_care({scalar(1), scalar(1), scalar(1), scalar(1)});
  EXPECT_NEAR(s.P(0, 0), 1.0 + std::sqrt(2.0), 1e-10);
  EXPECT_LT(s.closed_loop_eigenvalues(0).real(), 0.0);
}

TEST(Care, RandomInstancesHaveSmallResidualAndStableLoop) {
  std::mt19937_64 g(3);
  int done = 0;
  while (done < 60) {
    const int n = 1 + done % 6, p = 1 + done % 3;
    CareProblem pr{gauss(g, n, n), gauss(g, n, p), spd(g, n), spd(g, p)};
    if (!is_stabilizable(pr.A, pr.B)) continue;
    const CareSolution s = solve_care(pr);
    EXPECT_LE(care_residual(pr, s.P), 1e-8);
    EXPECT_TRUE(is_hurwitz(pr.A - pr.B * s.K));
    EXPECT_LE((s.P - s.P.transpose()).norm(), 1e-10 * s.P.norm());
    EXPECT_GE(min_symmetric_eigenvalue(s.P), -1e-10);
    ++done;
  }
}

TEST(Care, SimilarityInvariance) {
  std::mt19937_64 g(11);
  const int n = 4;
  CareProblem pr{gauss(g, n, n), gauss(g, n, 2), spd(g, n), spd(g, 2)};
  const Matrix T = Eigen::HouseholderQR<Matrix>(gauss(g, n, n)).householderQ();
  const CareSolution a = solve_care(pr);
  const CareSolution b =
      solve_care({T.transpose() * pr.A * T, T.transpose() * pr.B, T.transpose() * pr.Q * T, pr.R});
  EXPECT_LE((b.P - T.transpose() * a.P * T).norm(), 1e-8 * a.P.norm());
  EXPECT_LE((b.K - a.K * T).norm(), 1e-8 * a.K.norm());
}

TEST(Care, RejectsUnstabilizablePair) {
  Matrix A = Matrix::Identity(2, 2);
  Matrix B(2, 1);
  B << 1, 0;
  EXPECT_FALSE(is_stabilizable(A, B));
  EXPECT_THROW(solve_care({A, B, Matrix::Identity(2, 2), scalar(1)}), NotStabilizable);
}

TEST(Care, UncontrollableStableModeIsFine) {
  Matrix A(2, 2);
  A << -1, 0, 0, 1;
  Matrix B(2, 1);
  B << 0, 1;
  EXPECT_TRUE(is_stabilizable(A, B));
  const CareSolution s = solve_care({A, B, Matrix::Identity(2, 2), scalar(1)});
  EXPECT_TRUE(is_hurwitz(A - B * s.K));
}

TEST(Care, RejectsBadWeights) {
  EXPECT_THROW(solve_care({scalar(0), scalar(1), scalar(1), scalar(-1)}), IndefiniteWeight);
  EXPECT_THROW(solve_care({scalar(0), scalar(1), scalar(-1), scalar(1)}), IndefiniteWeight);
  EXPECT_THROW(solve_care({scalar(0), Matrix::Ones(2, 1), scalar(1), scalar(1)}),
               DimensionMismatch);
  EXPECT_THROW(solve_care({scalar(NAN), scalar(1), scalar(1), scalar(1)}), NonFinite);
}

TEST(Lyapunov, MatchesKroneckerDefinition) {
  std::mt19937_64 g(5);
  const int n = 5;
  Matrix A = gauss(g, n, n);
  A -= (spectral_abscissa(A) + 1.0) * Matrix::Identity(n, n);
  const Matrix Q = spd(g, n);
  const Matrix X = solve_lyapunov(A, Q);
  EXPECT_LE((A.transpose() * X + X * A + Q).norm(), 1e-10 * X.norm());
  EXPECT_GT(min_symmetric_eigenvalue(X), 0.0);
}

TEST(Lyapunov, RejectsUnstableOperator) {
  EXPECT_THROW(solve_lyapunov(scalar(1), scalar(1)), NotHurwitz);
}

TEST(Care, InitialGainStabilizes) {
  std::mt19937_64 g(8);
  for (int i = 0; i < 20; ++i) {
    const Matrix A = gauss(g, 4, 4) + 2.0 * Matrix::Identity(4, 4);
    const Matrix B = gauss(g, 4, 2);
    EXPECT_TRUE(is_hurwitz(A - B * initial_stabilizing_gain(A, B)));
  }
}
