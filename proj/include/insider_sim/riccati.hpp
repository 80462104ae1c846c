#pragma once

#include "insider_sim/linalg.hpp"

namespace insider_sim {

/// Continuous algebraic Riccati equation
///   A'P + PA + Q - P B R^{-1} B' P = 0.
struct CareProblem {
  Matrix A;
  Matrix B;
  Matrix Q;
  Matrix R;
};

struct CareSolution {
  Matrix P;
  Matrix K;  // R^{-1} B' P
  double residual = 0.0;
  ComplexVector closed_loop_eigenvalues;
  int iterations = 0;
};

struct RiccatiOptions {
  double tol = 1e-9;
  double rank_tol = kRankTol;
  int max_iterations = 100;
};

/// Stabilizing solution by Newton-Kleinman; residual <= tol * scale. Throws NotStabilizable,
/// IndefiniteWeight, DimensionMismatch, NonFinite or NoConvergence.
CareSolution solve_care(const CareProblem& problem, const RiccatiOptions& options = {});

/// Solves A'X + XA + Q = 0 for Hurwitz A. Throws NotHurwitz otherwise.
Matrix solve_lyapunov(const Matrix& A, const Matrix& Q, double rank_tol = kRankTol);

/// PBH test on every eigenvalue with nonnegative real part.
bool is_stabilizable(const Matrix& A, const Matrix& B, double rank_tol = kRankTol);

bool is_hurwitz(const Matrix& A, double rank_tol = kRankTol);

/// Frobenius norm of the Riccati residual.
double care_residual(const CareProblem& problem, const Matrix& P);

/// max(1, |Q| + 2|A'P| + |P B R^-1 B' P|). Convergence is declared when the
/// residual is below tol times this, so huge solutions are not held to an
/// absolute bound that rounding cannot reach.
double care_residual_scale(const CareProblem& problem, const Matrix& P);

/// A gain K with A - BK Hurwitz, by shifting the spectrum of A.
Matrix initial_stabilizing_gain(const Matrix& A, const Matrix& B, double rank_tol = kRankTol);

}  // namespace insider_sim
