#include "insider_sim/insider_response.hpp"

#include <cmath>

#include "insider_sim/errors.hpp"

namespace insider_sim {

void InsiderCost::validate(Eigen::Index n, Eigen::Index m) const {
  if (Qa.rows() != n || Qa.cols() != n) throw DimensionMismatch("Qa must be n x n");
  if (R2.rows() != m || R2.cols() != m) throw DimensionMismatch("insider R2 must be m x m");
  if (x_ref.size() != n) throw DimensionMismatch("insider reference must have n entries");
  if (!(rho > 0.0) || !std::isfinite(rho)) {
    throw ValidationError("insider_cost.rho", "must be positive and finite");
  }
  require_psd(Qa, "Qa");
  require_psd(R2, "insider R2");
  require_finite(x_ref, "insider x_ref");
}

double InsiderCost::effective_rho() const { return std::max(rho, kRhoFloor); }

CareProblem cross_term_reduction(const CrossWeightedCare& p) {
  const Eigen::LDLT<Matrix> R(p.R);
  const Matrix RinvSt = R.solve(p.S.transpose());
  return {p.A - p.B * RinvSt, p.B, symmetrize(p.Q - p.S * RinvSt), p.R};
}

double cross_care_residual(const CrossWeightedCare& p, const Matrix& P) {
  const Matrix G = P * p.B + p.S;
  const Matrix res = p.A.transpose() * P + P * p.A + p.Q - G * p.R.ldlt().solve(G.transpose());
  return res.norm();
}

CrossWeightedCare insider_problem(const LinearDynamics& dyn, const Matrix& K1_star,
                                  const Matrix& K2_star, const InsiderCost& cost) {
  const double rho = cost.effective_rho();
  const auto m = dyn.m();
  return {dyn.A - dyn.B1 * K1_star, dyn.B2, cost.Qa + rho * K2_star.transpose() * K2_star,
          cost.R2 + rho * Matrix::Identity(m, m), rho * K2_star.transpose()};
}

InsiderResponse insider_best_response(const LinearDynamics& dyn, const AffineFeedbackLaw& u1_star,
                                      const AffineFeedbackLaw& u2_star, const InsiderCost& cost,
                                      const RiccatiOptions& options) {
  cost.validate(dyn.n(), dyn.m());
  const CrossWeightedCare full = insider_problem(dyn, u1_star.K, u2_star.K, cost);
  const CareProblem reduced = cross_term_reduction(full);
  if (min_symmetric_eigenvalue(reduced.Q) < -1e-9 * std::max(1.0, reduced.Q.norm())) {
    throw IndefiniteWeight("reduced insider state weight is indefinite");
  }
  CareProblem clean = reduced;
  // Roundoff can leave tiny negative eigenvalues; clip them.
  {
    Eigen::SelfAdjointEigenSolver<Matrix> es(reduced.Q);
    clean.Q = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).asDiagonal() *
              es.eigenvectors().transpose();
  }
  const CareSolution care = solve_care(clean, options);
  InsiderResponse out;
  out.P = care.P;
  const Matrix K = full.R.ldlt().solve(dyn.B2.transpose() * care.P + full.S.transpose());
  out.u2 = AffineFeedbackLaw::tracking(K, cost.x_ref);
  out.residual = cross_care_residual(full, care.P);
  out.reference_residual = check_insider_reference(dyn, u1_star, cost.x_ref);
  return out;
}

double check_insider_reference(const LinearDynamics& dyn, const AffineFeedbackLaw& u1_star,
                               const Vector& x_ref_a) {
  return ((dyn.A - dyn.B1 * u1_star.K) * x_ref_a - dyn.B1 * u1_star.k).norm();
}

Vector affine_feedforward_oracle(const FeedforwardProblem& p) {
  require_square(p.closed_loop_A, "closed_loop_A");
  if (!is_hurwitz(p.closed_loop_A)) throw NotHurwitz("closed loop is not Hurwitz");
  const Vector g = p.closed_loop_A.transpose().fullPivLu().solve(p.forcing);
  return p.R.ldlt().solve(p.B.transpose() * g + p.offset);
}

Vector insider_exact_bias(const LinearDynamics& dyn, const AffineFeedbackLaw& u1_star,
                          const AffineFeedbackLaw& u2_star, const InsiderCost& cost,
                          const InsiderResponse& response) {
  // Linear terms of the stationary value function xPx + 2g'x give
  // (Abar - B2 K)' g = Qa x_a - rho (K2* - K)' k2* - P d with d = -B1 k1*.
  const double rho = cost.effective_rho();
  const Matrix& K = response.u2.K;
  const Matrix Abar = dyn.A - dyn.B1 * u1_star.K;
  const Vector d = -dyn.B1 * u1_star.k;
  FeedforwardProblem ff;
  ff.closed_loop_A = Abar - dyn.B2 * K;
  ff.B = dyn.B2;
  ff.R = cost.R2 + rho * Matrix::Identity(dyn.m(), dyn.m());
  ff.forcing = cost.Qa * cost.x_ref - rho * (u2_star.K - K).transpose() * u2_star.k -
               response.P * d;
  ff.offset = rho * u2_star.k;
  return affine_feedforward_oracle(ff);
}

GroundTruth make_ground_truth(const LinearDynamics& dyn, const AffineFeedbackLaw& u2) {
  GroundTruth g;
  g.Theta1 = -dyn.B2 * u2.K;
  g.Theta2 = -dyn.B2 * u2.k;
  const auto n = dyn.n();
  g.theta.resize(n * (n + 1));
  for (Eigen::Index i = 0; i < n; ++i) {
    g.theta.segment(i * (n + 1), n) = g.Theta1.row(i).transpose();
    g.theta(i * (n + 1) + n) = g.Theta2(i);
  }
  return g;
}

}  // namespace insider_sim
