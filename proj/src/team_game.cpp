#include "insider_sim/team_game.hpp"

#include <cmath>

#include "insider_sim/errors.hpp"
#include "insider_sim/rk4.hpp"

namespace insider_sim {

LinearDynamics::LinearDynamics(Matrix a, Matrix b1, Matrix b2)
    : A(std::move(a)), B1(std::move(b1)), B2(std::move(b2)) {
  require_square(A, "A");
  if (B1.rows() != A.rows() || B2.rows() != A.rows()) {
    throw DimensionMismatch("B1 and B2 need one row per state");
  }
  if (B1.cols() != B2.cols()) throw DimensionMismatch("B1 and B2 must have equal width");
  require_finite(A, "A");
  require_finite(B1, "B1");
  require_finite(B2, "B2");
  if (!is_stabilizable(A, B())) throw NotStabilizable("(A, [B1 B2]) is not stabilizable");
}

Matrix LinearDynamics::B() const {
  Matrix b(A.rows(), B1.cols() + B2.cols());
  b << B1, B2;
  return b;
}

Vector LinearDynamics::derivative(const Vector& x, const Vector& u1, const Vector& u2) const {
  return A * x + B1 * u1 + B2 * u2;
}

AffineFeedbackLaw AffineFeedbackLaw::tracking(const Matrix& K, const Vector& x_ref) {
  return {K, -K * x_ref};
}

void TeamCost::validate(Eigen::Index n, Eigen::Index m) const {
  if (Qc.rows() != n || Qc.cols() != n) throw DimensionMismatch("Qc must be n x n");
  if (R1.rows() != m || R1.cols() != m) throw DimensionMismatch("R1 must be m x m");
  if (R2.rows() != m || R2.cols() != m) throw DimensionMismatch("R2 must be m x m");
  if (x_ref.size() != n) throw DimensionMismatch("team reference must have n entries");
  require_psd(Qc, "Qc");
  require_pd(R1, "R1");
  require_pd(R2, "R2");
  require_finite(x_ref, "x_ref");
}

TeamSolution solve_team(const LinearDynamics& dyn, const TeamCost& cost,
                        const RiccatiOptions& options) {
  cost.validate(dyn.n(), dyn.m());
  const Matrix R = block_diag({cost.R1, cost.R2});
  const CareSolution care = solve_care({dyn.A, dyn.B(), cost.Qc, R}, options);
  TeamSolution sol;
  sol.P = care.P;
  sol.residual = care.residual;
  const Matrix K1 = cost.R1.ldlt().solve(dyn.B1.transpose() * care.P);
  const Matrix K2 = cost.R2.ldlt().solve(dyn.B2.transpose() * care.P);
  sol.u1 = AffineFeedbackLaw::tracking(K1, cost.x_ref);
  sol.u2 = AffineFeedbackLaw::tracking(K2, cost.x_ref);
  return sol;
}

double evaluate_cost(const LinearDynamics& dyn, const TeamCost& cost,
                     const AffineFeedbackLaw& u1, const AffineFeedbackLaw& u2,
                     const Vector& x0, const CostEvaluation& eval) {
  const auto n = dyn.n();
  auto f = [&](double, const Vector& y) {
    const Vector x = y.head(n);
    const Vector a = u1(x);
    const Vector b = u2(x);
    const Vector e = x - cost.x_ref;
    Vector dy(n + 1);
    dy.head(n) = dyn.derivative(x, a, b);
    dy(n) = e.dot(cost.Qc * e) + a.dot(cost.R1 * a) + b.dot(cost.R2 * b);
    return dy;
  };
  Vector y = Vector::Zero(n + 1);
  y.head(n) = x0;
  const auto steps = static_cast<long>(std::llround(eval.horizon / eval.dt));
  for (long i = 0; i < steps; ++i) {
    y = rk4_step(f, i * eval.dt, y, eval.dt);
    if (!y.allFinite() || y.head(n).cwiseAbs().maxCoeff() > eval.divergence_bound) {
      throw Divergence("state left the admissible box", (i + 1) * eval.dt);
    }
  }
  return y(n);
}

}  // namespace insider_sim
