#include "insider_sim/mitigation.hpp"

#include "insider_sim/errors.hpp"

namespace insider_sim {

void MitigationCost::validate(Eigen::Index n, Eigen::Index m) const {
  if (Qm.rows() != n || Qm.cols() != n) throw DimensionMismatch("Qm must be n x n");
  if (R1.rows() != m || R1.cols() != m) throw DimensionMismatch("mitigation R1 must be m x m");
  require_pd(Qm, "Qm");
  require_pd(R1, "mitigation R1");
  if (!auto_reference && x_ref.size() != n) {
    throw DimensionMismatch("mitigation reference must have n entries");
  }
  if (auto_reference && anchor.size() != n) throw DimensionMismatch("anchor must have n entries");
  if (anchor_weights.size() && anchor_weights.size() != n) {
    throw DimensionMismatch("anchor weights must have n entries");
  }
  if (anchor_weights.size() && !(anchor_weights.array() > 0.0).all()) {
    throw ValidationError("mitigation_cost.anchor_weights", "must be positive");
  }
}

std::pair<Matrix, Vector> unpack_estimate(const Vector& theta, Eigen::Index n,
                                          const std::vector<int>& selector) {
  const auto p = n + 1;
  const auto rows = static_cast<Eigen::Index>(selector.size());
  if (theta.size() != rows * p) throw DimensionMismatch("theta does not match selector");
  Matrix Theta1 = Matrix::Zero(n, n);
  Vector Theta2 = Vector::Zero(n);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const int i = selector[r];
    if (i < 0 || i >= n) throw DimensionMismatch("selector row out of range");
    Theta1.row(i) = theta.segment(r * p, n).transpose();
    Theta2(i) = theta(r * p + n);
  }
  return {Theta1, Theta2};
}

Vector pack_estimate(const Matrix& Theta1, const Vector& Theta2,
                     const std::vector<int>& selector) {
  const auto n = Theta1.rows();
  const auto p = n + 1;
  Vector theta(static_cast<Eigen::Index>(selector.size()) * p);
  for (size_t r = 0; r < selector.size(); ++r) {
    theta.segment(r * p, n) = Theta1.row(selector[r]).transpose();
    theta(r * p + n) = Theta2(selector[r]);
  }
  return theta;
}

Vector compute_mitigation_reference(const Matrix& Theta1, const Vector& Theta2,
                                    const LinearDynamics& dyn, const Vector& anchor,
                                    const Vector& weights, double rank_tol) {
  const Matrix M = dyn.A + Theta1;
  const auto n = M.cols();
  Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  const double cutoff = rank_tol * std::max(1.0, s.size() ? s(0) : 0.0);
  Eigen::Index rank = 0;
  while (rank < s.size() && s(rank) > cutoff) ++rank;
  // Minimum-norm least-squares point.
  Vector x = Vector::Zero(n);
  const Vector Utb = svd.matrixU().transpose() * (-Theta2);
  for (Eigen::Index i = 0; i < rank; ++i) x += (Utb(i) / s(i)) * svd.matrixV().col(i);
  if (rank == n || anchor.size() != n) return x;
  const Matrix N = svd.matrixV().rightCols(n - rank);
  const Vector w = weights.size() == n ? weights : Vector::Ones(n);
  const Matrix NtW = N.transpose() * w.asDiagonal();
  const Vector y = (NtW * N).ldlt().solve(NtW * (anchor - x));
  return x + N * y;
}

MitigationLaw synthesize_mitigation_law(const Matrix& Theta1, const Vector& Theta2,
                                        const LinearDynamics& dyn, const MitigationCost& cost,
                                        const Vector& theta_snapshot,
                                        const RiccatiOptions& options) {
  const Matrix Ahat = dyn.A + Theta1;
  if (!Ahat.allFinite() || !Theta2.allFinite()) throw NonFinite("estimate is not finite");
  if (!is_stabilizable(Ahat, dyn.B1, options.rank_tol)) {
    throw NotStabilizable("estimated (A + Theta1, B1) is not stabilizable");
  }
  const CareSolution care = solve_care({Ahat, dyn.B1, cost.Qm, cost.R1}, options);
  MitigationLaw law;
  law.P = care.P;
  law.K = care.K;
  law.x_ref = cost.auto_reference
                  ? compute_mitigation_reference(Theta1, Theta2, dyn, cost.anchor,
                                                 cost.anchor_weights, options.rank_tol)
                  : cost.x_ref;
  law.k = -law.K * law.x_ref;
  law.theta_snapshot = theta_snapshot;
  law.stale = false;
  return law;
}

MitigationLaw update_mitigation_law(const MitigationLaw& prev, const Matrix& Theta1,
                                    const Vector& Theta2, const LinearDynamics& dyn,
                                    const MitigationCost& cost, const Vector& theta_snapshot,
                                    const RiccatiOptions& options) {
  try {
    return synthesize_mitigation_law(Theta1, Theta2, dyn, cost, theta_snapshot, options);
  } catch (const NotStabilizable&) {
  } catch (const NoConvergence&) {
    // numerically on the edge of stabilizability
  }
  MitigationLaw held = prev;
  held.stale = true;
  return held;
}

Vector mitigation_control(const MitigationLaw& law, const Vector& x, const Vector& probe) {
  return -law.K * x - law.k + probe;
}

}  // namespace insider_sim
