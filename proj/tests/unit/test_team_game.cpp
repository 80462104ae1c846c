#include <cmath>

#include <gtest/gtest.h>

#include "insider_sim/errors.hpp"
#include "insider_sim/team_game.hpp"

using namespace insider_sim;

namespace {
Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }
}  // namespace

TEST(Team, ScalarClosedForm) {
  // Two identical integrator inputs share the load: 2 P^2 = 1.
  const LinearDynamics dyn(scalar(0), scalar(1), scalar(1));
  const TeamSolution s = solve_team(dyn, {scalar(1), scalar(1), scalar(1), Vector::Zero(1)});
  EXPECT_NEAR(s.P(0, 0), 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(s.u1.K(0, 0), 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(s.u2.K(0, 0), 1.0 / std::sqrt(2.0), 1e-12);
}

TEST(Team, TrackingLawVanishesAtReference) {
  const LinearDynamics dyn(scalar(0), scalar(1), scalar(1));
  const Vector ref = Vector::Constant(1, 4.0);
  const TeamSolution s = solve_team(dyn, {scalar(1), scalar(1), scalar(1), ref});
  EXPECT_NEAR(s.u1(ref)(0), 0.0, 1e-12);
  EXPECT_NEAR(s.u1.k(0), -s.u1.K(0, 0) * 4.0, 1e-12);
}

TEST(Team, CostMatchesValueFunction) {
  const LinearDynamics dyn(scalar(0), scalar(1), scalar(1));
  const TeamCost cost{scalar(1), scalar(1), scalar(1), Vector::Zero(1)};
  const TeamSolution s = solve_team(dyn, cost);
  const Vector x0 = Vector::Constant(1, 2.0);
  const double J = evaluate_cost(dyn, cost, s.u1, s.u2, x0, {30.0, 1e-3, 1e6});
  EXPECT_NEAR(J, s.P(0, 0) * 4.0, 1e-6);
}

TEST(Team, NoUnilateralOrJointImprovement) {
  const LinearDynamics dyn(scalar(0.5), scalar(1), scalar(2));
  const TeamCost cost{scalar(2), scalar(1), scalar(3), Vector::Zero(1)};
  const TeamSolution s = solve_team(dyn, cost);
  const Vector x0 = Vector::Constant(1, 1.0);
  const double J = evaluate_cost(dyn, cost, s.u1, s.u2, x0, {30.0, 1e-3, 1e6});
  for (double dk : {-0.2, 0.2}) {
    AffineFeedbackLaw u1 = s.u1;
    u1.K(0, 0) += dk;
    EXPECT_GT(evaluate_cost(dyn, cost, u1, s.u2, x0, {30.0, 1e-3, 1e6}), J);
  }
  for (double dk : {-0.1, 0.1}) {
    AffineFeedbackLaw u1 = s.u1, u2 = s.u2;
    u1.K(0, 0) += dk;
    u2.K(0, 0) -= dk;
    EXPECT_GT(evaluate_cost(dyn, cost, u1, u2, x0, {30.0, 1e-3, 1e6}), J);
  }
}

TEST(Team, ShapeAndStabilizabilityChecks) {
  EXPECT_THROW(LinearDynamics(scalar(0), Matrix::Ones(2, 1), scalar(1)), DimensionMismatch);
  EXPECT_THROW(LinearDynamics(scalar(1), scalar(0), scalar(0)), NotStabilizable);
  const LinearDynamics dyn(scalar(0), scalar(1), scalar(1));
  EXPECT_THROW(solve_team(dyn, {scalar(1), scalar(0), scalar(1), Vector::Zero(1)}),
               IndefiniteWeight);
}

TEST(Team, CostEvaluationDetectsDivergence) {
  const LinearDynamics dyn(scalar(1), scalar(1), scalar(1));
  const AffineFeedbackLaw zero{scalar(0), Vector::Zero(1)};
  EXPECT_THROW(evaluate_cost(dyn, {scalar(1), scalar(1), scalar(1), Vector::Zero(1)}, zero, zero,
                             Vector::Ones(1), {50.0, 1e-2, 100.0}),
               Divergence);
}
