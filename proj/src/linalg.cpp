#include "insider_sim/linalg.hpp"

#include <cmath>
#include <limits>

#include "insider_sim/errors.hpp"

namespace insider_sim {

bool all_finite(const Matrix& m) { return m.allFinite(); }

void require_finite(const Matrix& m, const std::string& name) {
  if (!m.allFinite()) throw NonFinite(name + " has non-finite entries");
}

void require_square(const Matrix& m, const std::string& name) {
  if (m.rows() != m.cols()) {
    throw DimensionMismatch(name + " must be square, got " + std::to_string(m.rows()) +
                            "x" + std::to_string(m.cols()));
  }
}

void require_symmetric(const Matrix& m, const std::string& name, double tol) {
  require_square(m, name);
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol * scale) {
    throw IndefiniteWeight(name + " is not symmetric");
  }
}

void require_psd(const Matrix& m, const std::string& name, double tol) {
  require_symmetric(m, name);
  if (m.size() == 0) return;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (min_symmetric_eigenvalue(m) < -tol * scale) {
    throw IndefiniteWeight(name + " is not positive semidefinite");
  }
}

void require_pd(const Matrix& m, const std::string& name, double tol) {
  require_symmetric(m, name);
  if (m.size() == 0 || min_symmetric_eigenvalue(m) <= tol) {
    throw IndefiniteWeight(name + " is not positive definite");
  }
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

ComplexVector eigenvalues(const Matrix& a) {
  if (a.size() == 0) return ComplexVector(0);
  Eigen::EigenSolver<Matrix> es(a, false);
  return es.eigenvalues();
}

double spectral_abscissa(const Matrix& a) {
  if (a.size() == 0) return -std::numeric_limits<double>::infinity();
  return eigenvalues(a).real().maxCoeff();
}

double min_symmetric_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Matrix block_diag(const std::vector<Matrix>& blocks) {
  Eigen::Index r = 0, c = 0;
  for (const auto& b : blocks) {
    r += b.rows();
    c += b.cols();
  }
  Matrix out = Matrix::Zero(r, c);
  r = c = 0;
  for (const auto& b : blocks) {
    out.block(r, c, b.rows(), b.cols()) = b;
    r += b.rows();
    c += b.cols();
  }
  return out;
}

}  // namespace insider_sim
