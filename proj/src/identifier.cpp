#include "insider_sim/identifier.hpp"

#include <cmath>

#include "insider_sim/errors.hpp"
#include "insider_sim/rk4.hpp"

namespace insider_sim {

FilterBank FilterBank::zero(Eigen::Index n, double lambda, const Vector& x_initial,
                            bool transient_correction) {
  FilterBank fb;
  fb.lambda = lambda;
  fb.eta1 = Vector::Zero(n);
  fb.xi2 = Vector::Zero(n);
  fb.eta2 = 0.0;
  fb.transient_correction = transient_correction;
  fb.x_initial = x_initial.size() == n ? x_initial : Vector::Zero(n);
  return fb;
}

Vector FilterBank::pack() const {
  const auto n = this->n();
  Vector v(2 * n + 1);
  v << eta1, xi2, eta2;
  return v;
}

void FilterBank::unpack(const Vector& v) {
  const auto n = this->n();
  eta1 = v.head(n);
  xi2 = v.segment(n, n);
  eta2 = v(2 * n);
}

RegressorSnapshot regressor(const FilterBank& fb, const Vector& x) {
  const auto n = fb.n();
  RegressorSnapshot s;
  s.phi.resize(n + 1);
  s.phi << fb.eta1, fb.eta2;
  Vector xi1 = x - fb.lambda * fb.eta1;
  if (fb.transient_correction) xi1 -= std::exp(-fb.lambda * fb.elapsed) * fb.x_initial;
  s.z = xi1 + fb.xi2;
  s.m_sq = 1.0 + s.phi.squaredNorm();
  return s;
}

Vector filter_derivative(const FilterBank& fb, const Vector& x, const Vector& u1,
                         const LinearDynamics& dyn) {
  const auto n = fb.n();
  Vector d(2 * n + 1);
  d.head(n) = -fb.lambda * fb.eta1 + x;
  d.segment(n, n) = -fb.lambda * fb.xi2 - dyn.A * x - dyn.B1 * u1;
  d(2 * n) = -fb.lambda * fb.eta2 + 1.0;
  return d;
}

std::pair<FilterBank, RegressorSnapshot> filter_step(const FilterBank& fb, const Vector& x,
                                                     const Vector& u1,
                                                     const LinearDynamics& dyn, double dt) {
  if (!(dt > 0.0)) throw ValidationError("dt", "must be positive");
  FilterBank next = fb;
  auto f = [&](double, const Vector& y) {
    FilterBank tmp = fb;
    tmp.unpack(y);
    return filter_derivative(tmp, x, u1, dyn);
  };
  next.unpack(rk4_step(f, 0.0, fb.pack(), dt));
  next.elapsed += dt;
  if (!next.pack().allFinite()) throw NonFinite("filter state is not finite");
  return {next, regressor(next, x)};
}

ParameterMap::ParameterMap(Vector phi, Eigen::Index rows) : phi_(std::move(phi)), rows_(rows) {}

Vector ParameterMap::apply(const Vector& theta) const {
  const auto p = phi_.size();
  if (theta.size() != rows_ * p) throw DimensionMismatch("theta does not match the map");
  Vector out(rows_);
  for (Eigen::Index i = 0; i < rows_; ++i) out(i) = theta.segment(i * p, p).dot(phi_);
  return out;
}

Vector ParameterMap::adjoint(const Vector& eta) const {
  const auto p = phi_.size();
  if (eta.size() != rows_) throw DimensionMismatch("eta does not match the map");
  Vector out(rows_ * p);
  for (Eigen::Index i = 0; i < rows_; ++i) out.segment(i * p, p) = eta(i) * phi_;
  return out;
}

Matrix ParameterMap::dense() const {
  const auto p = phi_.size();
  Matrix out = Matrix::Zero(rows_, rows_ * p);
  for (Eigen::Index i = 0; i < rows_; ++i) out.block(i, i * p, 1, p) = phi_.transpose();
  return out;
}

ParameterMap build_parameter_map(const Vector& phi, Eigen::Index rows) {
  return ParameterMap(phi, rows);
}

Vector vec_rows(const Matrix& Theta1, const Vector& Theta2) {
  const auto n = Theta1.rows();
  Vector v(n * (Theta1.cols() + 1));
  const auto p = Theta1.cols() + 1;
  for (Eigen::Index i = 0; i < n; ++i) {
    v.segment(i * p, p - 1) = Theta1.row(i).transpose();
    v(i * p + p - 1) = Theta2(i);
  }
  return v;
}

std::vector<int> default_selector(const Matrix& B2, double tol) {
  std::vector<int> rows;
  for (Eigen::Index i = 0; i < B2.rows(); ++i) {
    if (B2.row(i).cwiseAbs().maxCoeff() > tol) rows.push_back(static_cast<int>(i));
  }
  return rows;
}

RegressorSnapshot reduced_regressor(const std::vector<int>& selector,
                                    const RegressorSnapshot& snap) {
  if (selector.empty()) throw EmptySelector("selector has no rows");
  RegressorSnapshot out = snap;
  out.z.resize(static_cast<Eigen::Index>(selector.size()));
  for (size_t i = 0; i < selector.size(); ++i) {
    if (selector[i] < 0 || selector[i] >= snap.z.size()) {
      throw DimensionMismatch("selector row out of range");
    }
    out.z(static_cast<Eigen::Index>(i)) = snap.z(selector[i]);
  }
  return out;
}

double normalization_sq(const Vector& phi, Normalization kind, Eigen::Index rows,
                        const Matrix& weight) {
  const double q = weight.size() ? phi.dot(weight * phi) : phi.squaredNorm();
  switch (kind) {
    case Normalization::Trace:
      return 1.0 + static_cast<double>(rows) * q;
    case Normalization::PhiSquared:
    case Normalization::Weighted:
      break;
  }
  return 1.0 + q;
}

void DagGains::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ValidationError("identifier.alpha", "must be positive");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ValidationError("identifier.beta", "must be nonnegative");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ValidationError("identifier.gamma", "must be positive");
}

DagDerivative dag_derivative(const DagState& ds, const RegressorSnapshot& snap,
                             const DagGains& g, const UpdateGeometry& geom) {
  const auto rows = snap.z.size();
  const auto p = snap.phi.size();
  if (ds.theta.size() != rows * p || ds.xi.size() != rows) {
    throw DimensionMismatch("identifier state does not match the regressor");
  }
  const Vector wphi = geom.metric.size() ? Vector(geom.metric * snap.phi) : snap.phi;
  DagDerivative d;
  d.eps.resize(rows);
  d.xi_dot.resize(rows);
  d.theta_dot.resize(rows * p);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double eps = (snap.z(i) - ds.theta.segment(i * p, p).dot(snap.phi)) / snap.m_sq;
    const double eta = (g.beta / g.alpha) * ds.xi(i) + g.gamma * eps;
    d.eps(i) = eps;
    d.xi_dot(i) = (eps - ds.xi(i)) / g.alpha;
    d.theta_dot.segment(i * p, p) = eta * wphi;
  }
  return d;
}

DagState dag_step(const DagState& ds, const RegressorSnapshot& snap, const DagGains& g,
                  double dt, const UpdateGeometry& geom) {
  if (!(dt > 0.0)) throw ValidationError("dt", "must be positive");
  const auto nt = ds.theta.size();
  const auto nx = ds.xi.size();
  auto f = [&](double, const Vector& y) {
    const DagState s{y.head(nt), y.tail(nx)};
    const DagDerivative d = dag_derivative(s, snap, g, geom);
    Vector dy(nt + nx);
    dy << d.theta_dot, d.xi_dot;
    return dy;
  };
  Vector y(nt + nx);
  y << ds.theta, ds.xi;
  y = rk4_step(f, 0.0, y, dt);
  if (!y.allFinite()) throw NonFinite("identifier state is not finite");
  return {y.head(nt), y.tail(nx)};
}

double spr_margin(const DagGains& g) {
  double best = INFINITY;
  for (int i = 0; i <= 600; ++i) {
    const double w = std::pow(10.0, -3.0 + 6.0 * i / 600.0);
    const double re = g.gamma + g.beta / (1.0 + g.alpha * g.alpha * w * w);
    best = std::min(best, re);
  }
  return best;
}

double dag_storage(const DagState& ds, const Vector& theta_star, const DagGains& g,
                   double m_sq) {
  return 0.5 * (ds.theta - theta_star).squaredNorm() + 0.5 * m_sq * g.beta * ds.xi.squaredNorm();
}

void ProbingConfig::validate() const {
  if (frequencies.size() != amplitudes.size()) {
    throw ValidationError("probing.frequencies", "needs one entry per amplitude");
  }
  if (!phases.empty() && phases.size() != amplitudes.size()) {
    throw ValidationError("probing.phases", "needs one entry per amplitude");
  }
  for (double v : amplitudes) {
    if (!std::isfinite(v)) throw ValidationError("probing.amplitudes", "must be finite");
  }
  for (double v : frequencies) {
    if (!std::isfinite(v) || v < 0.0) throw ValidationError("probing.frequencies", "must be finite and nonnegative");
  }
  for (double v : phases) {
    if (!std::isfinite(v)) throw ValidationError("probing.phases", "must be finite");
  }
}

Vector probing_signal(double t, const ProbingConfig& cfg, Eigen::Index m) {
  double s = 0.0;
  for (size_t j = 0; j < cfg.amplitudes.size(); ++j) {
    const double ph = cfg.phases.empty() ? 0.0 : cfg.phases[j];
    s += cfg.amplitudes[j] * std::sin(cfg.frequencies[j] * t + ph);
  }
  return Vector::Constant(m, s);
}

PeCertificate pe_check(const std::vector<Vector>& trace, double dt, double T0, long stride) {
  if (!(dt > 0.0) || !(T0 > 0.0)) throw ValidationError("pe_check", "dt and T0 must be positive");
  const long w = std::lround(T0 / dt);
  const long N = static_cast<long>(trace.size());
  if (w < 1 || N - 1 < 2 * w) throw InsufficientData("trace shorter than two windows");
  if (stride <= 0) stride = std::max(1L, w / 50);
  const auto p = trace.front().size();
  PeCertificate out;
  out.alpha0 = INFINITY;
  out.alpha1 = 0.0;
  for (long start = 0; start + w <= N - 1; start += stride) {
    Matrix G = Matrix::Zero(p, p);
    for (long i = start; i <= start + w; ++i) {
      const double c = (i == start || i == start + w) ? 0.5 * dt : dt;
      G.selfadjointView<Eigen::Lower>().rankUpdate(trace[i], c);
    }
    G = G.selfadjointView<Eigen::Lower>();
    Eigen::SelfAdjointEigenSolver<Matrix> es(G, Eigen::EigenvaluesOnly);
    out.alpha0 = std::min(out.alpha0, es.eigenvalues()(0));
    out.alpha1 = std::max(out.alpha1, es.eigenvalues()(p - 1));
    ++out.windows;
  }
  return out;
}

Matrix centering_metric(const Vector& center, double lambda, double bias_scale) {
  const auto n = center.size();
  Matrix M = Matrix::Identity(n + 1, n + 1);
  M.topRightCorner(n, 1) = -lambda * center;
  M(n, n) = bias_scale;
  return M.transpose() * M;
}

}  // namespace insider_sim
