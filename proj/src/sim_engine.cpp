#include "insider_sim/sim_engine.hpp"

#include <cmath>
#include <complex>
#include <future>
#include <limits>

#include "insider_sim/errors.hpp"
#include "insider_sim/rk4.hpp"

namespace insider_sim {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool same(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

}  // namespace

const char* to_string(Mode mode) {
  switch (mode) {
    case Mode::Nominal:
      return "nominal";
    case Mode::InsiderUnmitigated:
      return "insider_unmitigated";
    case Mode::IdentifyAndMitigate:
      return "identify_and_mitigate";
  }
  return "?";
}

Mode mode_from_string(const std::string& s) {
  if (s == "nominal") return Mode::Nominal;
  if (s == "insider_unmitigated") return Mode::InsiderUnmitigated;
  if (s == "identify_and_mitigate") return Mode::IdentifyAndMitigate;
  throw ValidationError("plan.mode", "unknown mode '" + s + "'");
}

long PhasePlan::steps() const { return std::lround(t_end / dt); }
long PhasePlan::trigger_step() const { return std::lround(t_trigger / dt); }

void PhasePlan::validate(double lambda) const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("plan.dt", "must be positive");
  if (!(t_end > 0.0) || !std::isfinite(t_end)) throw ValidationError("plan.t_end", "must be positive");
  if (std::abs(steps() * dt - t_end) > 1e-9 * std::max(1.0, t_end)) {
    throw ValidationError("plan.t_end", "must be a whole number of steps");
  }
  if (!(t_trigger >= 0.0) || t_trigger > t_end) {
    throw ValidationError("plan.t_trigger", "must lie in [0, t_end]");
  }
  if (dt > 1.0 / (10.0 * lambda)) throw ValidationError("plan.dt", "must not exceed 1/(10 lambda)");
  if (record_every < 1) throw ValidationError("plan.record_every", "must be at least 1");
  if (!(divergence_bound > 0.0)) throw ValidationError("plan.divergence_bound", "must be positive");
}

Vector Experiment::theta_star() const {
  const GroundTruth& g = plan.mode == Mode::Nominal ? nominal : truth;
  return pack_estimate(g.Theta1, g.Theta2, identifier.selector);
}

bool Metrics::operator==(const Metrics& o) const {
  return same(min_gap, o.min_gap) && same(final_gap, o.final_gap) &&
         same(settling_time, o.settling_time) && settled == o.settled &&
         collision_flag == o.collision_flag &&
         same(final_estimation_error, o.final_estimation_error) &&
         same(final_gain_error, o.final_gain_error) && same(pe_alpha0, o.pe_alpha0) &&
         same(pe_alpha1, o.pe_alpha1) && same(band, o.band) && same(target, o.target);
}

SimulationTrace simulate(const Experiment& ex) {
  const LinearDynamics& dyn = ex.dyn;
  const PhasePlan& plan = ex.plan;
  const IdentifierConfig& id = ex.identifier;
  plan.validate(id.lambda);
  id.gains.validate();
  ex.probing.signal.validate();
  const auto n = dyn.n();
  const auto m = dyn.m();
  const auto k = static_cast<Eigen::Index>(id.selector.size());
  const auto p = n + 1;
  if (k == 0) throw EmptySelector("identifier selector is empty");
  if (id.theta0.size() != k * p) throw DimensionMismatch("theta0 does not match the selector");
  if (ex.x0.size() != n || !ex.x0.allFinite()) throw ValidationError("plan.x0", "must be a finite n-vector");

  const bool idm = plan.mode == Mode::IdentifyAndMitigate;
  const AffineFeedbackLaw& insider = plan.mode == Mode::Nominal ? ex.u2_star : ex.u2_insider;
  const Vector theta_star = ex.theta_star();
  const long N = plan.steps();
  const long trig = idm ? plan.trigger_step() : N + 1;
  const double dt = plan.dt;
  const double k_star_norm = std::max(ex.law_star.K.norm(), 1e-300);

  SimulationTrace tr;
  tr.dt = dt * plan.record_every;

  Vector x = ex.x0;
  FilterBank fb = FilterBank::zero(n, id.lambda, x, id.transient_correction);
  DagState ds{id.theta0, Vector::Zero(k)};
  bool identifying = idm && !plan.identify_from_trigger;
  double id_start = 0.0;
  bool mitigating = false;
  MitigationLaw law;
  law.K = ex.u1_star.K;
  law.k = ex.u1_star.k;
  law.theta_snapshot = id.theta0;
  long since_update = 0;

  // Window mode without an explicit shift starts unshifted and adopts the
  // first window mean.
  Vector center = id.center.size() == n ? id.center : ex.x0;
  UpdateGeometry geom;
  if (id.centering == Centering::Fixed ||
      (id.centering == Centering::Window && id.center.size() == n)) {
    geom.metric = centering_metric(center, id.lambda, id.bias_scale);
  }
  Vector center_sum = Vector::Zero(n);
  double center_last = 0.0;

  bool certified = false;
  double t_cert = 0.0;
  Matrix gram = Matrix::Zero(p, p);
  double gram_start = 0.0;

  Matrix last_acl;
  double last_acl_t = 0.0;
  bool collided = false;
  const int gap = ex.metrics.gap_index;

  auto probe_at = [&](double t) -> Vector {
    if (!idm) return Vector::Zero(m);
    double scale = 1.0;
    if (certified && ex.probing.decay_after_pe) scale = std::exp(-(t - t_cert) / ex.probing.decay_tau);
    return scale * probing_signal(t, ex.probing.signal, m);
  };
  auto applied_u1 = [&](double t, const Vector& xs) -> Vector {
    return mitigating ? mitigation_control(law, xs, probe_at(t)) : Vector(ex.u1_star(xs) + probe_at(t));
  };
  auto snapshot_of = [&](const FilterBank& f, const Vector& xs) {
    RegressorSnapshot s = reduced_regressor(id.selector, regressor(f, xs));
    const Matrix& w = id.normalization == Normalization::Weighted ? id.norm_weight : geom.metric;
    s.m_sq = normalization_sq(s.phi, id.normalization, k, w);
    return s;
  };

  const Eigen::Index nf = 2 * n + 1;
  const Eigen::Index off_f = n, off_xi = n + nf, off_th = n + nf + k;
  const Eigen::Index total = off_th + k * p;
  auto deriv = [&](double t, const Vector& y) -> Vector {
    Vector dy = Vector::Zero(total);
    const Vector xs = y.head(n);
    const Vector u1 = applied_u1(t, xs);
    dy.head(n) = dyn.derivative(xs, u1, insider(xs));
    if (identifying) {
      FilterBank f = fb;
      f.unpack(y.segment(off_f, nf));
      f.elapsed = t - id_start;
      dy.segment(off_f, nf) = filter_derivative(f, xs, u1, dyn);
      const DagState s{y.tail(k * p), y.segment(off_xi, k)};
      const DagDerivative d = dag_derivative(s, snapshot_of(f, xs), id.gains, geom);
      dy.segment(off_xi, k) = d.xi_dot;
      dy.tail(k * p) = d.theta_dot;
    }
    return dy;
  };

  auto update_law = [&](double t) {
    const auto [Theta1, Theta2] = unpack_estimate(ds.theta, n, id.selector);
    MitigationLaw next =
        update_mitigation_law(law, Theta1, Theta2, dyn, ex.mitigation, ds.theta, ex.riccati);
    since_update = 0;
    if (next.stale) {
      ++tr.diagnostics.stale_holds;
      tr.events.push_back({t, "law_hold"});
      law.stale = true;
      return;
    }
    ++tr.diagnostics.law_updates;
    const Matrix acl = dyn.A + Theta1 - dyn.B1 * next.K;
    if (!is_hurwitz(acl)) ++tr.diagnostics.hurwitz_failures;
    if (last_acl.size() && t > last_acl_t) {
      const double inc = (acl - last_acl).squaredNorm() / (t - last_acl_t);
      tr.diagnostics.l2_total += inc;
      if (t >= 0.5 * plan.t_end) tr.diagnostics.l2_tail += inc;
    }
    last_acl = acl;
    last_acl_t = t;
    if (law.stale) tr.events.push_back({t, "law_recovered"});
    law = next;
  };

  for (long i = 0;; ++i) {
    const double t = i * dt;
    if (i == trig) {
      mitigating = true;
      tr.events.push_back({t, "mitigation_on"});
      if (plan.identify_from_trigger) {
        identifying = true;
        id_start = t;
        fb = FilterBank::zero(n, id.lambda, x, id.transient_correction);
        ds.xi.setZero();
        center_last = t;
      }
      update_law(t);
    } else if (mitigating) {
      const double dth = (ds.theta - law.theta_snapshot).cwiseAbs().maxCoeff();
      const bool due = since_update >= ex.policy.every_steps && dth > 0.0;
      const bool jump = dth > ex.policy.theta_threshold && !law.stale;
      if (due || jump) update_law(t);
    }

    if (i % plan.record_every == 0 || i == N) {
      tr.t.push_back(t);
      tr.x.push_back(x);
      tr.u1.push_back(applied_u1(t, x));
      tr.u2.push_back(insider(x));
      tr.theta.push_back(ds.theta);
      if (idm) {
        Vector phi(p);
        phi << fb.eta1, fb.eta2;
        tr.phi.push_back(phi);
      }
      tr.est_err.push_back((ds.theta - theta_star).norm());
      const Matrix& K = mitigating ? law.K : ex.u1_star.K;
      tr.gain_err.push_back((K - ex.law_star.K).norm() / k_star_norm);
    }
    if (i == N) break;

    if (identifying && id.centering == Centering::Window) {
      center_sum += x;
      if (t + dt - center_last >= id.center_window - 0.5 * dt) {
        const Vector mean = center_sum / std::lround((t + dt - center_last) / dt);
        if (geom.metric.size() == 0 || (mean - center).cwiseAbs().maxCoeff() > id.center_tolerance) {
          center = mean;
          geom.metric = centering_metric(center, id.lambda, id.bias_scale);
          ++tr.diagnostics.recenterings;
          tr.events.push_back({t + dt, "recenter"});
        }
        center_sum.setZero();
        center_last = t + dt;
      }
    }
    if (identifying && ex.probing.decay_after_pe && !certified) {
      Vector phi(p);
      phi << fb.eta1, fb.eta2;
      gram.noalias() += dt * phi * phi.transpose();
      if (t + dt - gram_start >= ex.probing.pe_window - 0.5 * dt) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
        if (es.eigenvalues()(0) > ex.probing.pe_threshold * es.eigenvalues()(p - 1)) {
          certified = true;
          t_cert = t + dt;
          tr.events.push_back({t_cert, "pe_certified"});
        }
        gram.setZero();
        gram_start = t + dt;
      }
    }

    Vector y(total);
    y << x, fb.pack(), ds.xi, ds.theta;
    y = rk4_step(deriv, t, y, dt);
    if (!y.allFinite()) throw NonFinite("simulation state is not finite");
    x = y.head(n);
    fb.unpack(y.segment(off_f, nf));
    fb.elapsed = t + dt - id_start;
    ds.xi = y.segment(off_xi, k);
    ds.theta = y.tail(k * p);
    ++since_update;
    const double xn = x.cwiseAbs().maxCoeff();
    tr.diagnostics.max_state_norm = std::max(tr.diagnostics.max_state_norm, xn);
    if (xn > plan.divergence_bound) throw Divergence("state exceeded the divergence bound", t + dt);
    if (!collided && gap >= 0 && gap < n && x(gap) <= 0.0) {
      collided = true;
      tr.events.push_back({t + dt, "collision"});
    }
  }
  tr.metrics = recompute_metrics(tr, ex.metrics);
  return tr;
}

Metrics recompute_metrics(const SimulationTrace& tr, const MetricsSpec& spec) {
  Metrics out;
  out.target = spec.target;
  out.band = spec.band;
  if (tr.t.empty()) return out;
  const int g = spec.gap_index;
  out.min_gap = INFINITY;
  long last_out = -1;
  for (size_t i = 0; i < tr.x.size(); ++i) {
    const double v = tr.x[i](g);
    out.min_gap = std::min(out.min_gap, v);
    if (v <= 0.0) out.collision_flag = true;
    if (!(std::abs(v - spec.target) <= spec.band)) last_out = static_cast<long>(i);
  }
  out.final_gap = tr.x.back()(g);
  const long N = static_cast<long>(tr.t.size());
  if (last_out == N - 1) {
    out.settled = false;
    out.settling_time = kNaN;
  } else {
    out.settled = true;
    out.settling_time = tr.t[last_out + 1];
  }
  out.final_estimation_error = tr.est_err.back();
  out.final_gain_error = tr.gain_err.back();
  out.pe_alpha0 = out.pe_alpha1 = kNaN;
  if (!tr.phi.empty()) {
    try {
      const PeCertificate pe = pe_check(tr.phi, tr.dt, spec.pe_window);
      out.pe_alpha0 = pe.alpha0;
      out.pe_alpha1 = pe.alpha1;
    } catch (const InsufficientData&) {
    }
  }
  return out;
}

std::vector<std::pair<double, Metrics>> sweep_trigger(const Experiment& base,
                                                      const std::vector<double>& triggers) {
  if (triggers.empty()) throw ValidationError("triggers", "at least one trigger time is needed");
  std::vector<Experiment> runs;
  for (double tt : triggers) {
    if (!(tt >= 0.0) || tt > base.plan.t_end) {
      throw ValidationError("triggers", "trigger time outside [0, t_end]");
    }
    Experiment e = base;
    e.plan.t_trigger = tt;
    runs.push_back(std::move(e));
  }
  std::vector<std::future<Metrics>> jobs;
  for (const auto& e : runs) {
    jobs.push_back(std::async(std::launch::async, [&e] { return simulate(e).metrics; }));
  }
  std::vector<std::pair<double, Metrics>> out;
  for (size_t i = 0; i < jobs.size(); ++i) out.emplace_back(triggers[i], jobs[i].get());
  return out;
}

double probing_band(const Experiment& ex) {
  const auto n = ex.dyn.n();
  const Matrix acl = ex.dyn.A + ex.truth.Theta1 - ex.dyn.B1 * ex.law_star.K;
  const Eigen::MatrixXcd b = (ex.dyn.B1 * Vector::Ones(ex.dyn.m())).cast<std::complex<double>>();
  const auto& s = ex.probing.signal;
  double band = 0.0;
  for (size_t j = 0; j < s.amplitudes.size(); ++j) {
    const std::complex<double> jw(0.0, s.frequencies[j]);
    const Eigen::MatrixXcd M = jw * Eigen::MatrixXcd::Identity(n, n) - acl.cast<std::complex<double>>();
    const Eigen::VectorXcd r = M.fullPivLu().solve(b);
    band += std::abs(s.amplitudes[j]) * std::abs(r(ex.metrics.gap_index));
  }
  return band;
}

}  // namespace insider_sim
