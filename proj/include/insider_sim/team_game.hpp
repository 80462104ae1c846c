#pragma once

#include "insider_sim/linalg.hpp"
#include "insider_sim/riccati.hpp"

namespace insider_sim {

/// x' = A x + B1 u1 + B2 u2, both players with the same input width.
struct LinearDynamics {
  Matrix A;
  Matrix B1;
  Matrix B2;

  LinearDynamics() = default;
  // Checks shapes and stabilizability of (A, [B1 B2]).
  LinearDynamics(Matrix A, Matrix B1, Matrix B2);

  Eigen::Index n() const { return A.rows(); }
  Eigen::Index m() const { return B1.cols(); }
  Matrix B() const;
  Vector derivative(const Vector& x, const Vector& u1, const Vector& u2) const;
};

/// u = -K x - k.
struct AffineFeedbackLaw {
  Matrix K;
  Vector k;

  static AffineFeedbackLaw tracking(const Matrix& K, const Vector& x_ref);
  Vector operator()(const Vector& x) const { return -K * x - k; }
};

struct TeamCost {
  Matrix Qc;
  Matrix R1;
  Matrix R2;
  Vector x_ref;

  void validate(Eigen::Index n, Eigen::Index m) const;
};

struct TeamSolution {
  AffineFeedbackLaw u1;
  AffineFeedbackLaw u2;
  Matrix P;
  double residual = 0.0;
};

TeamSolution solve_team(const LinearDynamics& dyn, const TeamCost& cost,
                        const RiccatiOptions& options = {});

struct CostEvaluation {
  double horizon = 50.0;
  double dt = 1e-3;
  double divergence_bound = 1e6;
};

/// Integral of the team cost along the closed loop, by RK4 on an
/// augmented state. Throws Divergence if the state leaves the box.
double evaluate_cost(const LinearDynamics& dyn, const TeamCost& cost,
                     const AffineFeedbackLaw& u1, const AffineFeedbackLaw& u2,
                     const Vector& x0, const CostEvaluation& eval = {});

}  // namespace insider_sim
