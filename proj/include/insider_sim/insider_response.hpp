#pragma once

#include "insider_sim/linalg.hpp"
#include "insider_sim/riccati.hpp"
#include "insider_sim/team_game.hpp"

namespace insider_sim {

// Smallest disciplinary weight accepted; smaller positive values are clamped.
inline constexpr double kRhoFloor = 1e-12;

/// Insider's private cost with the disciplinary penalty
/// rho |u2 - u2*|^2 that keeps its input near the team law.
struct InsiderCost {
  Matrix Qa;
  Matrix R2;
  double rho = 1.0;
  Vector x_ref;

  void validate(Eigen::Index n, Eigen::Index m) const;
  double effective_rho() const;
};

/// A'P + PA + Q - (PB + S) R^{-1} (B'P + S') = 0.
struct CrossWeightedCare {
  Matrix A;
  Matrix B;
  Matrix Q;
  Matrix R;
  Matrix S;  // n x m
};

/// Equivalent cross-free problem with A - B R^{-1} S' and Q - S R^{-1} S'.
CareProblem cross_term_reduction(const CrossWeightedCare& problem);

double cross_care_residual(const CrossWeightedCare& problem, const Matrix& P);

/// The insider's problem against fixed team gains: closed loop under u1*,
/// state weight Qa + rho K2*'K2*, input weight R2 + rho I, cross weight rho K2*'.
CrossWeightedCare insider_problem(const LinearDynamics& dyn, const Matrix& K1_star,
                                  const Matrix& K2_star, const InsiderCost& cost);

struct InsiderResponse {
  AffineFeedbackLaw u2;
  Matrix P;
  double residual = 0.0;        // of the cross-weighted equation
  double reference_residual = 0.0;  // see check_insider_reference
};

/// Best response of the insider. Throws IndefiniteWeight if the reduced
/// state weight is not PSD, and the solver errors otherwise.
InsiderResponse insider_best_response(const LinearDynamics& dyn, const AffineFeedbackLaw& u1_star,
                                      const AffineFeedbackLaw& u2_star, const InsiderCost& cost,
                                      const RiccatiOptions& options = {});

/// |(A - B1 K1*) x_a - B1 k1*|: zero when the insider's reference is an
/// equilibrium of the loop closed by u1*, which is when the feedforward
/// -K2 x_a is exact.
double check_insider_reference(const LinearDynamics& dyn, const AffineFeedbackLaw& u1_star,
                               const Vector& x_ref_a);

/// Stationary affine-LQR feedforward: solves Acl' g = forcing and returns
/// R^{-1} (B' g + offset).
struct FeedforwardProblem {
  Matrix closed_loop_A;
  Matrix B;
  Matrix R;
  Vector forcing;
  Vector offset;
};
Vector affine_feedforward_oracle(const FeedforwardProblem& problem);

/// Exact stationary bias of the insider's affine optimum, for comparison
/// with the -K2 x_a shortcut.
Vector insider_exact_bias(const LinearDynamics& dyn, const AffineFeedbackLaw& u1_star,
                          const AffineFeedbackLaw& u2_star, const InsiderCost& cost,
                          const InsiderResponse& response);

/// What the insider changes from the decision maker's point of view:
/// x' = (A + Theta1) x + B1 u1 + theta2 once u2 = -K2 x - k2 is substituted.
struct GroundTruth {
  Matrix Theta1;  // -B2 K2
  Vector Theta2;  // -B2 k2
  Vector theta;   // row-major vec of [Theta1 Theta2]
};
GroundTruth make_ground_truth(const LinearDynamics& dyn, const AffineFeedbackLaw& u2);

}  // namespace insider_sim
