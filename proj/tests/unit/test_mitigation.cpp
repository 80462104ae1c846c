#include <cmath>

#include <gtest/gtest.h>

#include "insider_sim/errors.hpp"
#include "insider_sim/mitigation.hpp"
#include "insider_sim/scenarios.hpp"

using namespace insider_sim;

namespace {

ScenarioConfig lane() {
  ScenarioConfig c = build_lane_change({});
  c.anchor_weights = Eigen::Vector3d(1.0, 1e-6, 1e-6);
  return c;
}

}  // namespace

TEST(Estimate, PackUnpackRoundTrip) {
  const Vector theta = Eigen::Vector4d(1, 2, 3, 4);
  const auto [T1, T2] = unpack_estimate(theta, 3, {2});
  EXPECT_EQ(T1.row(2), Eigen::RowVector3d(1, 2, 3));
  EXPECT_EQ(T1.topRows(2).norm(), 0.0);
  EXPECT_EQ(T2, Eigen::Vector3d(0, 0, 4));
  EXPECT_EQ(pack_estimate(T1, T2, {2}), theta);
}

TEST(Reference, InvertibleDriftHasUniqueEquilibrium) {
  const LinearDynamics dyn(Matrix::Constant(1, 1, -1.0), Matrix::Ones(1, 1), Matrix::Ones(1, 1));
  const Vector x = compute_mitigation_reference(Matrix::Constant(1, 1, -1.0), Vector::Constant(1, 4.0),
                                                dyn, Vector::Zero(1));
  EXPECT_NEAR(x(0), 2.0, 1e-12);
}

TEST(Reference, SingularDriftPicksWeightedNearestEquilibrium) {
  const Experiment ex = prepare_experiment(lane());
  const Matrix& T1 = ex.truth.Theta1;
  const Vector& T2 = ex.truth.Theta2;
  Vector anchor(3);
  anchor << 73, 30, 30;
  const Vector w = Eigen::Vector3d(1.0, 1e-6, 1e-6);
  const Vector x = compute_mitigation_reference(T1, T2, ex.dyn, anchor, w);
  EXPECT_LE(((ex.dyn.A + T1) * x + T2).norm(), 1e-9);
  EXPECT_NEAR(x(0), 73.0, 1e-3);
  // Moving along the equilibrium line only increases the weighted distance.
  Eigen::FullPivLU<Matrix> lu(ex.dyn.A + T1);
  const Matrix N = lu.kernel();
  ASSERT_EQ(N.cols(), 1);
  auto dist = [&](const Vector& y) { return (w.asDiagonal() * (y - anchor).cwiseAbs2()).sum(); };
  for (double s : {-1e-2, 1e-2}) EXPECT_GT(dist(x + s * N.col(0)), dist(x));
  // Unit weights give the plain nearest point instead.
  const Vector xu = compute_mitigation_reference(T1, T2, ex.dyn, anchor);
  EXPECT_LE(((ex.dyn.A + T1) * xu + T2).norm(), 1e-9);
  EXPECT_LE((xu - anchor).norm(), (x - anchor).norm() + 1e-9);
}

TEST(Law, FullKnowledgeLawIsLqrOnTrueDrift) {
  const Experiment ex = prepare_experiment(lane());
  const MitigationLaw law = synthesize_mitigation_law(ex.truth.Theta1, ex.truth.Theta2, ex.dyn,
                                                      ex.mitigation, ex.truth.theta);
  EXPECT_LE((law.K - ex.law_star.K).norm(), 1e-12);
  EXPECT_TRUE(is_hurwitz(ex.dyn.A + ex.truth.Theta1 - ex.dyn.B1 * law.K));
  // The reference is held: closed-loop equilibrium.
  const Vector xdot = (ex.dyn.A + ex.truth.Theta1) * law.x_ref + ex.dyn.B1 * law.as_law()(law.x_ref) +
                      ex.truth.Theta2;
  EXPECT_LE(xdot.norm(), 1e-8);
  EXPECT_FALSE(law.stale);
}

TEST(Law, HoldsPreviousLawOnUnstabilizableEstimate) {
  const Experiment ex = prepare_experiment(lane());
  const MitigationLaw prev = ex.law_star;
  // Theta1 cancels the coupling so that the gap row is unreachable and unstable.
  Matrix T1 = Matrix::Zero(3, 3);
  T1(0, 0) = 1.0;
  T1(0, 1) = -1.0;
  EXPECT_THROW(synthesize_mitigation_law(T1, Vector::Zero(3), ex.dyn, ex.mitigation, Vector()),
               NotStabilizable);
  const MitigationLaw held =
      update_mitigation_law(prev, T1, Vector::Zero(3), ex.dyn, ex.mitigation, Vector());
  EXPECT_TRUE(held.stale);
  EXPECT_EQ(held.K, prev.K);
  EXPECT_EQ(held.k, prev.k);
}

TEST(Law, ControlAddsProbe) {
  MitigationLaw law;
  law.K = Matrix::Constant(1, 2, 1.0);
  law.k = Vector::Constant(1, 0.5);
  const Vector u = mitigation_control(law, Eigen::Vector2d(1, 2), Vector::Constant(1, 0.25));
  EXPECT_DOUBLE_EQ(u(0), -3.0 - 0.5 + 0.25);
}

TEST(Cost, Validation) {
  MitigationCost c{Matrix::Identity(2, 2), -Matrix::Identity(1, 1), true, Vector(), Vector::Zero(2), Vector()};
  EXPECT_THROW(c.validate(2, 1), IndefiniteWeight);
  c.R1 = Matrix::Identity(1, 1);
  c.anchor_weights = Eigen::Vector2d(1.0, 0.0);
  EXPECT_THROW(c.validate(2, 1), ValidationError);
}
