#pragma once

#include <utility>
#include <vector>

#include "insider_sim/linalg.hpp"
#include "insider_sim/riccati.hpp"
#include "insider_sim/team_game.hpp"

namespace insider_sim {

struct MitigationCost {
  Matrix Qm;
  Matrix R1;
  bool auto_reference = true;  // recompute the reference from the estimate
  Vector x_ref;                // used when auto_reference is false
  Vector anchor;               // tie-break target for the auto reference
  Vector anchor_weights;       // empty means unit weights

  void validate(Eigen::Index n, Eigen::Index m) const;
};

struct RecomputePolicy {
  int every_steps = 10;
  double theta_threshold = 1e-3;
};

/// Certainty-equivalence law -K x - k computed from one parameter snapshot.
struct MitigationLaw {
  Matrix K;
  Vector k;
  Matrix P;
  Vector theta_snapshot;
  Vector x_ref;
  bool stale = false;

  AffineFeedbackLaw as_law() const { return {K, k}; }
};

/// Inverse of the row-major stacking; rows outside the selector are zero.
std::pair<Matrix, Vector> unpack_estimate(const Vector& theta, Eigen::Index n,
                                          const std::vector<int>& selector);

/// Inverse of unpack_estimate restricted to the selected rows.
Vector pack_estimate(const Matrix& Theta1, const Vector& Theta2,
                     const std::vector<int>& selector);

/// Least-squares equilibrium of x' = (A + Theta1) x + Theta2. Among
/// minimizers, the one closest to the anchor in the weighted norm.
Vector compute_mitigation_reference(const Matrix& Theta1, const Vector& Theta2,
                                    const LinearDynamics& dyn, const Vector& anchor,
                                    const Vector& weights = {}, double rank_tol = kRankTol);

/// Fresh law; throws NotStabilizable if (A + Theta1, B1) fails PBH.
MitigationLaw synthesize_mitigation_law(const Matrix& Theta1, const Vector& Theta2,
                                        const LinearDynamics& dyn, const MitigationCost& cost,
                                        const Vector& theta_snapshot,
                                        const RiccatiOptions& options = {});

/// Like synthesize, but holds prev (flagged stale) when the estimate is not
/// stabilizable or its Riccati equation cannot be solved.
MitigationLaw update_mitigation_law(const MitigationLaw& prev, const Matrix& Theta1,
                                    const Vector& Theta2, const LinearDynamics& dyn,
                                    const MitigationCost& cost, const Vector& theta_snapshot,
                                    const RiccatiOptions& options = {});

Vector mitigation_control(const MitigationLaw& law, const Vector& x, const Vector& probe);

}  // namespace insider_sim
