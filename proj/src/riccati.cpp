#include "insider_sim/riccati.hpp"

#include <cmath>
#include <complex>
#include <exception>

#include "insider_sim/errors.hpp"

namespace insider_sim {
namespace {

using ComplexMatrix = Eigen::MatrixXcd;

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Matrix pseudo_inverse(const Matrix& m, double rel_tol) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  const double cutoff = rel_tol * std::max(s.size() ? s(0) : 0.0, 1e-300);
  Vector inv = Vector::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff) inv(i) = 1.0 / s(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

void validate(const CareProblem& p) {
  require_square(p.A, "A");
  const auto n = p.A.rows();
  if (p.B.rows() != n) throw DimensionMismatch("B must have as many rows as A");
  if (p.Q.rows() != n || p.Q.cols() != n) throw DimensionMismatch("Q must match A");
  if (p.R.rows() != p.B.cols() || p.R.cols() != p.B.cols()) {
    throw DimensionMismatch("R must be square with one row per input");
  }
  require_finite(p.A, "A");
  require_finite(p.B, "B");
  require_finite(p.Q, "Q");
  require_finite(p.R, "R");
  require_psd(p.Q, "Q");
  require_pd(p.R, "R");
}

}  // namespace

bool is_hurwitz(const Matrix& A, double rank_tol) {
  if (A.size() == 0) return true;
  if (!A.allFinite()) return false;
  return spectral_abscissa(A) < -rank_tol;
}

bool is_stabilizable(const Matrix& A, const Matrix& B, double rank_tol) {
  const auto n = A.rows();
  const auto m = B.cols();
  const ComplexVector eig = eigenvalues(A);
  for (Eigen::Index i = 0; i < eig.size(); ++i) {
    if (eig(i).real() < -rank_tol) continue;
    ComplexMatrix pbh(n, n + m);
    pbh.leftCols(n) = A.cast<std::complex<double>>() -
                      eig(i) * ComplexMatrix::Identity(n, n);
    pbh.rightCols(m) = B.cast<std::complex<double>>();
    Eigen::JacobiSVD<ComplexMatrix> svd(pbh);
    const Vector s = svd.singularValues();
    const double cutoff = rank_tol * std::max(1.0, s(0));
    if (s(n - 1) <= cutoff) return false;
  }
  return true;
}

Matrix solve_lyapunov(const Matrix& A, const Matrix& Q, double rank_tol) {
  require_square(A, "A");
  if (Q.rows() != A.rows() || Q.cols() != A.cols()) {
    throw DimensionMismatch("Q must match A");
  }
  if (!is_hurwitz(A, rank_tol)) throw NotHurwitz("Lyapunov operator is not Hurwitz");
  const auto n = A.rows();
  const Matrix I = Matrix::Identity(n, n);
  const Matrix L = kron(I, A.transpose()) + kron(A.transpose(), I);
  const Vector rhs = -Eigen::Map<const Vector>(Q.data(), n * n);
  const Vector x = L.fullPivLu().solve(rhs);
  const Matrix X = Eigen::Map<const Matrix>(x.data(), n, n);
  return symmetrize(X);
}

double care_residual_scale(const CareProblem& p, const Matrix& P) {
  const Matrix BtP = p.B.transpose() * P;
  const double quad = (BtP.transpose() * p.R.ldlt().solve(BtP)).norm();
  return std::max(1.0, p.Q.norm() + 2.0 * (p.A.transpose() * P).norm() + quad);
}

double care_residual(const CareProblem& p, const Matrix& P) {
  const Matrix BtP = p.B.transpose() * P;
  const Matrix res = p.A.transpose() * P + P * p.A + p.Q -
                     BtP.transpose() * p.R.ldlt().solve(BtP);
  return res.norm();
}

Matrix initial_stabilizing_gain(const Matrix& A, const Matrix& B, double rank_tol) {
  const auto n = A.rows();
  if (is_hurwitz(A, rank_tol)) return Matrix::Zero(B.cols(), n);
  // Bass: with M = A + beta I antistable, MZ + ZM' = 2BB' gives
  // (A - BK)Z + Z(A - BK)' = -2 beta Z for K = B'Z^+.
  const ComplexVector eig = eigenvalues(A);
  double beta = std::max(0.0, -eig.real().minCoeff()) + std::max(1.0, 0.1 * A.norm());
  const Matrix I = Matrix::Identity(n, n);
  for (int attempt = 0; attempt < 8; ++attempt, beta *= 2.0) {
    const Matrix M = A + beta * I;
    Matrix Z;
    try {
      Z = solve_lyapunov(-M.transpose(), 2.0 * B * B.transpose(), rank_tol);
    } catch (const NotHurwitz&) {
      continue;
    }
    const Matrix K = B.transpose() * pseudo_inverse(Z, 1e-12);
    if (K.allFinite() && is_hurwitz(A - B * K, rank_tol)) return K;
  }
  throw NoConvergence("could not find an initial stabilizing gain", NAN);
}

namespace {

CareSolution newton(const CareProblem& p, Matrix K, const RiccatiOptions& opt) {
  const Eigen::LDLT<Matrix> R_ldlt(p.R);
  CareSolution sol;
  sol.residual = INFINITY;
  int stalled = 0;
  bool converged = false;
  // After reaching the tolerance keep polishing while the residual still
  // drops; return the best iterate.
  for (int it = 1; it <= opt.max_iterations; ++it) {
    const Matrix Acl = p.A - p.B * K;
    Matrix P;
    try {
      P = solve_lyapunov(Acl, p.Q + K.transpose() * p.R * K, opt.rank_tol);
    } catch (const NotHurwitz&) {
      if (converged) break;
      throw NoConvergence("Newton iterate lost stability", sol.residual);
    }
    if (!P.allFinite()) {
      if (converged) break;
      throw NonFinite("Riccati iterate is not finite");
    }
    const Matrix K_next = R_ldlt.solve(p.B.transpose() * P);
    const double res = care_residual(p, P);
    const bool better = res < sol.residual;
    const bool big_step = res < 0.5 * sol.residual;
    if (better) {
      sol.P = P;
      sol.K = K_next;
      sol.residual = res;
      sol.iterations = it;
    }
    K = K_next;
    converged = converged || res <= opt.tol * care_residual_scale(p, P);
    stalled = big_step ? 0 : stalled + 1;
    if (converged && !better) break;
    if (stalled >= 5) break;
  }
  if (!(sol.residual <= opt.tol * care_residual_scale(p, sol.P))) {
    throw NoConvergence("Riccati residual " + std::to_string(sol.residual) +
                            " above tolerance",
                        sol.residual);
  }
  const Matrix Acl = p.A - p.B * sol.K;
  sol.closed_loop_eigenvalues = eigenvalues(Acl);
  if (!is_hurwitz(Acl, opt.rank_tol)) {
    throw NoConvergence("Riccati solution is not stabilizing", sol.residual);
  }
  return sol;
}

// Gain from the stable invariant subspace of the Hamiltonian matrix. Used when
// the shifted start is too ill conditioned for Newton to get going.
Matrix hamiltonian_gain(const CareProblem& p, double rank_tol) {
  const auto n = p.A.rows();
  const Eigen::LDLT<Matrix> R(p.R);
  Matrix H(2 * n, 2 * n);
  H << p.A, -p.B * R.solve(p.B.transpose()), -p.Q, -p.A.transpose();
  Eigen::EigenSolver<Matrix> es(H);
  if (es.info() != Eigen::Success) throw NoConvergence("Hamiltonian eigensolver failed", NAN);
  ComplexMatrix X(2 * n, n);
  Eigen::Index cols = 0;
  for (Eigen::Index i = 0; i < 2 * n; ++i) {
    if (es.eigenvalues()(i).real() < 0.0 && cols < n) X.col(cols++) = es.eigenvectors().col(i);
  }
  if (cols != n) throw NoConvergence("Hamiltonian has eigenvalues on the imaginary axis", NAN);
  const ComplexMatrix Pc = X.bottomRows(n) * X.topRows(n).fullPivLu().inverse();
  const Matrix P = symmetrize(Pc.real());
  const Matrix K = R.solve(p.B.transpose() * P);
  if (!K.allFinite() || !is_hurwitz(p.A - p.B * K, rank_tol)) {
    throw NoConvergence("Hamiltonian gain is not stabilizing", NAN);
  }
  return K;
}

}  // namespace

CareSolution solve_care(const CareProblem& p, const RiccatiOptions& opt) {
  validate(p);
  if (!is_stabilizable(p.A, p.B, opt.rank_tol)) {
    throw NotStabilizable("(A, B) is not stabilizable");
  }
  std::exception_ptr first;
  try {
    return newton(p, initial_stabilizing_gain(p.A, p.B, opt.rank_tol), opt);
  } catch (const Error&) {
    first = std::current_exception();
  }
  try {
    return newton(p, hamiltonian_gain(p, opt.rank_tol), opt);
  } catch (const Error&) {
    std::rethrow_exception(first);
  }
}

}  // namespace insider_sim
