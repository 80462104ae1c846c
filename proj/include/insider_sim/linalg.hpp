#pragma once

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace insider_sim {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;

// Default tolerance for rank and stability decisions.
inline constexpr double kRankTol = 1e-9;

bool all_finite(const Matrix& m);
void require_finite(const Matrix& m, const std::string& name);
void require_square(const Matrix& m, const std::string& name);
void require_symmetric(const Matrix& m, const std::string& name, double tol = 1e-9);
void require_psd(const Matrix& m, const std::string& name, double tol = 1e-9);
void require_pd(const Matrix& m, const std::string& name, double tol = 1e-12);

Matrix symmetrize(const Matrix& m);
ComplexVector eigenvalues(const Matrix& a);
double spectral_abscissa(const Matrix& a);
double min_symmetric_eigenvalue(const Matrix& m);
Matrix block_diag(const std::vector<Matrix>& blocks);

}  // namespace insider_sim
