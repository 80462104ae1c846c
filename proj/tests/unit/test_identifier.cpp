#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "insider_sim/errors.hpp"
#include "insider_sim/identifier.hpp"

using namespace insider_sim;

namespace {

struct Gen {
  std::mt19937_64 g{42};
  std::normal_distribution<double> d;
  Matrix operator()(Eigen::Index r, Eigen::Index c) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = d(g);
    return m;
  }
};

RegressorSnapshot consistent(const Vector& theta, const Vector& phi, Eigen::Index rows) {
  RegressorSnapshot s;
  s.phi = phi;
  s.z = build_parameter_map(phi, rows).apply(theta);
  s.m_sq = normalization_sq(phi, Normalization::PhiSquared, rows);
  return s;
}

}  // namespace

TEST(ParameterMap, MatchesMatrixProduct) {
  Gen gen;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + trial % 5, rows = 1 + trial % n;
    const Matrix Theta = gen(rows, n + 1);
    const Vector phi = gen(n + 1, 1);
    const ParameterMap map = build_parameter_map(phi, rows);
    const Vector theta = vec_rows(Theta.leftCols(n), Theta.col(n));
    EXPECT_LE((map.apply(theta) - Theta * phi).norm(), 1e-12 * (1 + Theta.norm() * phi.norm()));
    // Kronecker form and adjoint
    Matrix kron = Matrix::Zero(rows, rows * (n + 1));
    for (int i = 0; i < rows; ++i) kron.block(i, i * (n + 1), 1, n + 1) = phi.transpose();
    EXPECT_EQ(map.dense(), kron);
    const Vector eta = gen(rows, 1);
    EXPECT_NEAR(map.apply(theta).dot(eta), theta.dot(map.adjoint(eta)), 1e-10);
  }
}

TEST(ParameterMap, RowMajorLayout) {
  Matrix T1(2, 2);
  T1 << 1, 2, 3, 4;
  const Vector v = vec_rows(T1, Eigen::Vector2d(5, 6));
  Vector want(6);
  want << 1, 2, 5, 3, 4, 6;
  EXPECT_EQ(v, want);
  EXPECT_THROW(build_parameter_map(Vector::Ones(3), 2).apply(Vector::Ones(5)), DimensionMismatch);
}

TEST(Selector, RowsTouchedByInsider) {
  Matrix B2 = Matrix::Zero(3, 1);
  B2(2, 0) = 1.0;
  EXPECT_EQ(default_selector(B2), std::vector<int>{2});
  RegressorSnapshot s{Vector::Ones(4), Eigen::Vector3d(1, 2, 3), 1.0};
  EXPECT_EQ(reduced_regressor({2}, s).z, Vector::Constant(1, 3.0));
  EXPECT_THROW(reduced_regressor({}, s), EmptySelector);
}

TEST(Normalization, Variants) {
  const Vector phi = Eigen::Vector3d(1, 2, 2);
  EXPECT_DOUBLE_EQ(normalization_sq(phi, Normalization::PhiSquared, 2), 10.0);
  EXPECT_DOUBLE_EQ(normalization_sq(phi, Normalization::Trace, 2), 19.0);
  const Matrix W = 2.0 * Matrix::Identity(3, 3);
  EXPECT_DOUBLE_EQ(normalization_sq(phi, Normalization::Weighted, 2, W), 19.0);
}

TEST(Dag, TrueParameterIsFixedPoint) {
  Gen gen;
  const Vector theta = gen(8, 1), phi = gen(4, 1);
  const DagState ds{theta, Vector::Zero(2)};
  const DagDerivative d = dag_derivative(ds, consistent(theta, phi, 2), DagGains{});
  EXPECT_LE(d.theta_dot.norm(), 1e-14);
  EXPECT_LE(d.xi_dot.norm(), 1e-14);
  const DagState next = dag_step(ds, consistent(theta, phi, 2), DagGains{}, 1e-3);
  EXPECT_LE((next.theta - theta).norm(), 1e-14);
}

TEST(Dag, StorageIsNonincreasing) {
  Gen gen;
  const DagGains gains{};
  for (int trial = 0; trial < 20; ++trial) {
    const Vector theta_star = gen(6, 1);
    DagState ds{theta_star + gen(6, 1), 0.1 * gen(2, 1)};
    const Vector phi = gen(3, 1);
    const RegressorSnapshot snap = consistent(theta_star, phi, 2);
    double prev = dag_storage(ds, theta_star, gains, snap.m_sq);
    for (int step = 0; step < 500; ++step) {
      ds = dag_step(ds, snap, gains, 1e-3);
      const double now = dag_storage(ds, theta_star, gains, snap.m_sq);
      EXPECT_LE(now, prev * (1 + 1e-12) + 1e-15);
      prev = now;
    }
  }
}

TEST(Dag, StaticGradientAndMetric) {
  Gen gen;
  const Vector theta = gen(4, 1), phi = gen(4, 1);
  const RegressorSnapshot snap = consistent(theta, phi, 1);
  const DagState ds{Vector::Zero(4), Vector::Zero(1)};
  const DagGains g{1.0, 0.0, 3.0};
  const DagDerivative plain = dag_derivative(ds, snap, g);
  EXPECT_LE((plain.theta_dot - 3.0 * phi * plain.eps(0)).norm(), 1e-12);
  UpdateGeometry geom{2.0 * Matrix::Identity(4, 4)};
  EXPECT_LE((dag_derivative(ds, snap, g, geom).theta_dot - 2.0 * plain.theta_dot).norm(), 1e-12);
}

TEST(Dag, SprMarginAtLeastStaticGain) {
  for (double beta : {0.0, 1.0, 5.0, 50.0}) {
    const DagGains g{0.5, beta, 10.0};
    EXPECT_GE(spr_margin(g), 10.0 - 1e-12);
  }
  EXPECT_THROW((DagGains{-1.0, 1.0, 1.0}).validate(), ValidationError);
  EXPECT_THROW((DagGains{1.0, 1.0, 0.0}).validate(), ValidationError);
}

TEST(Pe, QuadratureSignals) {
  const double dt = 1e-3;
  const double T0 = 2 * M_PI;
  std::vector<Vector> tr;
  for (int i = 0; i <= static_cast<int>(3 * T0 / dt); ++i) {
    tr.push_back(Eigen::Vector2d(std::sin(i * dt), std::cos(i * dt)));
  }
  const PeCertificate c = pe_check(tr, dt, T0);
  EXPECT_NEAR(c.alpha0, M_PI, 1e-2);
  EXPECT_NEAR(c.alpha1, M_PI, 1e-2);
  EXPECT_GT(c.windows, 0);
}

TEST(Pe, ConstantRegressorIsNotExciting) {
  std::vector<Vector> tr(5000, Eigen::Vector2d(1.0, 2.0));
  const PeCertificate c = pe_check(tr, 0.01, 10.0);
  EXPECT_LE(std::abs(c.alpha0), 1e-10 * c.alpha1);
  EXPECT_THROW(pe_check(std::vector<Vector>(100, Eigen::Vector2d(1, 0)), 0.01, 10.0),
               InsufficientData);
}

TEST(Probing, SumOfSinesOnEveryChannel) {
  const ProbingConfig cfg{{1.0, 0.5}, {2.0, 3.0}, {0.0, 0.25}};
  const Vector u = probing_signal(0.7, cfg, 2);
  const double want = std::sin(1.4) + 0.5 * std::sin(2.1 + 0.25);
  EXPECT_DOUBLE_EQ(u(0), want);
  EXPECT_DOUBLE_EQ(u(1), want);
  EXPECT_THROW((ProbingConfig{{1.0}, {}, {}}).validate(), ValidationError);
}

TEST(Filters, RegressionIdentityForFrozenDrift) {
  // x' = (A + Theta1) x + B1 u1 + Theta2 with the state integrated finely.
  const LinearDynamics dyn(Matrix::Constant(1, 1, 0.0), Matrix::Ones(1, 1), Matrix::Ones(1, 1));
  const double th1 = -0.8, th2 = 0.3, dt = 1e-4;
  FilterBank fb = FilterBank::zero(1, 1.0, Vector::Constant(1, 2.0), true);
  Vector x = Vector::Constant(1, 2.0);
  RegressorSnapshot snap;
  for (int i = 0; i < 50000; ++i) {
    const Vector u1 = Vector::Constant(1, std::sin(i * dt));
    std::tie(fb, snap) = filter_step(fb, x, u1, dyn, dt);
    x(0) += dt * (th1 * x(0) + u1(0) + th2);
  }
  snap = regressor(fb, x);
  EXPECT_NEAR(snap.z(0), th1 * snap.phi(0) + th2 * snap.phi(1), 5e-3);
}

TEST(Centering, MetricMatchesShiftedRegressor) {
  const Vector c = Eigen::Vector2d(3.0, -1.0);
  const Matrix W = centering_metric(c, 2.0, 0.5);
  const Vector phi = Eigen::Vector3d(1.0, 4.0, 0.25);
  Vector shifted(3);
  shifted << phi.head(2) - 2.0 * c * phi(2), 0.5 * phi(2);
  EXPECT_NEAR(phi.dot(W * phi), shifted.squaredNorm(), 1e-12);
}
