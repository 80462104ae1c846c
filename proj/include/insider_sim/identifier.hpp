#pragma once

#include <utility>
#include <vector>

#include "insider_sim/linalg.hpp"
#include "insider_sim/team_game.hpp"

namespace insider_sim {

/// First-order filters turning the unknown drift into a static regression
/// z = Theta phi with phi = [eta1; eta2].
struct FilterBank {
  double lambda = 1.0;
  Vector eta1;   // filtered x
  Vector xi2;    // filtered -(A x + B1 u1)
  double eta2 = 0.0;  // filtered constant
  // With correction on, the response of the xi1 filter to x(0) is removed
  // so that zero initial conditions introduce no transient.
  bool transient_correction = false;
  Vector x_initial;
  double elapsed = 0.0;

  static FilterBank zero(Eigen::Index n, double lambda, const Vector& x_initial,
                         bool transient_correction);
  Eigen::Index n() const { return eta1.size(); }
  Vector pack() const;
  void unpack(const Vector& v);
};

struct RegressorSnapshot {
  Vector phi;     // n + 1
  Vector z;       // one entry per identified row
  double m_sq = 1.0;
};

/// phi, z and m^2 = 1 + phi'phi for the current filter state.
RegressorSnapshot regressor(const FilterBank& fb, const Vector& x);

/// Time derivative of the packed filter state [eta1; xi2; eta2].
Vector filter_derivative(const FilterBank& fb, const Vector& x, const Vector& u1,
                         const LinearDynamics& dyn);

/// One RK4 step with x and u1 held over the step.
std::pair<FilterBank, RegressorSnapshot> filter_step(const FilterBank& fb, const Vector& x,
                                                     const Vector& u1,
                                                     const LinearDynamics& dyn, double dt);

/// theta -> Theta phi for row-major theta; Phi = I_rows (x) phi'.
class ParameterMap {
 public:
  ParameterMap(Vector phi, Eigen::Index rows);
  Vector apply(const Vector& theta) const;
  Vector adjoint(const Vector& eta) const;
  Matrix dense() const;
  Eigen::Index rows() const { return rows_; }

 private:
  Vector phi_;
  Eigen::Index rows_;
};

ParameterMap build_parameter_map(const Vector& phi, Eigen::Index rows);

/// Row-major stacking of [Theta1 Theta2] and its inverse.
Vector vec_rows(const Matrix& Theta1, const Vector& Theta2);

/// Rows of B2 with a nonzero entry; these are the rows the insider can move.
std::vector<int> default_selector(const Matrix& B2, double tol = 0.0);

/// Restricts z to the selected rows. Throws EmptySelector.
RegressorSnapshot reduced_regressor(const std::vector<int>& selector,
                                    const RegressorSnapshot& snap);

enum class Normalization { PhiSquared, Trace, Weighted };

/// m^2 = 1 + phi'W phi (PhiSquared, Weighted) or 1 + rows phi'W phi (Trace).
/// An empty W means identity.
double normalization_sq(const Vector& phi, Normalization kind, Eigen::Index rows,
                        const Matrix& weight = {});

/// Per-channel compensator T(s) = gamma + beta / (alpha s + 1) in the
/// parameter update. beta = 0 gives the static normalized gradient.
struct DagGains {
  double alpha = 1.0;
  double beta = 5.0;
  double gamma = 10.0;
  void validate() const;
};

struct DagState {
  Vector theta;  // rows * (n + 1)
  Vector xi;     // one per row
};

/// Update-law geometry. metric W replaces the identity in
/// theta_i' = W phi eta_i; an empty metric means identity.
struct UpdateGeometry {
  Matrix metric;
};

struct DagDerivative {
  Vector theta_dot;
  Vector xi_dot;
  Vector eps;
};

DagDerivative dag_derivative(const DagState& ds, const RegressorSnapshot& snap,
                             const DagGains& gains, const UpdateGeometry& geom = {});

/// One RK4 step with the snapshot frozen over the step.
DagState dag_step(const DagState& ds, const RegressorSnapshot& snap, const DagGains& gains,
                  double dt, const UpdateGeometry& geom = {});

/// min over a log grid of Re T(jw).
double spr_margin(const DagGains& gains);

/// |theta - theta*|^2 / 2 + m^2 beta |xi|^2 / 2. Nonincreasing under
/// dag_step when the snapshot is frozen and consistent with theta*.
double dag_storage(const DagState& ds, const Vector& theta_star, const DagGains& gains,
                   double m_sq);

struct ProbingConfig {
  std::vector<double> amplitudes;
  std::vector<double> frequencies;  // rad/s
  std::vector<double> phases;
  void validate() const;
};

/// Sum of sinusoids broadcast to all m channels.
Vector probing_signal(double t, const ProbingConfig& cfg, Eigen::Index m);

struct PeCertificate {
  double alpha0 = 0.0;
  double alpha1 = 0.0;
  long windows = 0;
};

/// Sliding-window Gram bounds of a uniformly sampled regressor trace.
/// Throws InsufficientData when the trace is shorter than 2 T0.
PeCertificate pe_check(const std::vector<Vector>& phi_trace, double dt, double T0,
                       long stride = 1);

/// Metric MᵀM for the shifted regressor M phi = [eta1 - lambda c eta2; s eta2].
Matrix centering_metric(const Vector& center, double lambda, double bias_scale);

}  // namespace insider_sim
