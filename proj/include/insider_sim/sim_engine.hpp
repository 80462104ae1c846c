#pragma once

#include <string>
#include <utility>
#include <vector>

#include "insider_sim/identifier.hpp"
#include "insider_sim/insider_response.hpp"
#include "insider_sim/linalg.hpp"
#include "insider_sim/mitigation.hpp"
#include "insider_sim/riccati.hpp"
#include "insider_sim/team_game.hpp"

namespace insider_sim {

enum class Mode { Nominal, InsiderUnmitigated, IdentifyAndMitigate };

const char* to_string(Mode mode);
Mode mode_from_string(const std::string& s);

// Regressor shift used by the update law; None is the plain [x; 1] regressor.
enum class Centering { None, Fixed, Window };

struct IdentifierConfig {
  double lambda = 1.0;
  DagGains gains;
  Normalization normalization = Normalization::PhiSquared;
  Matrix norm_weight;           // Weighted normalization only
  std::vector<int> selector;    // 0-based rows
  bool transient_correction = true;
  Centering centering = Centering::None;
  Vector center;                // Fixed: the shift; Window: the initial shift (empty = x0)
  double center_window = 20.0;  // seconds between Window updates
  double center_tolerance = 0.0;
  double bias_scale = 1.0;
  Vector theta0;                // reduced, selector.size() * (n + 1)
};

struct ProbingSchedule {
  ProbingConfig signal;
  bool decay_after_pe = false;
  double decay_tau = 5.0;
  double pe_window = 20.0;
  double pe_threshold = 1e-12;  // relative to the largest window eigenvalue
};

struct PhasePlan {
  Mode mode = Mode::IdentifyAndMitigate;
  double t_trigger = 0.0;
  double t_end = 30.0;
  double dt = 1e-3;
  bool identify_from_trigger = false;
  double divergence_bound = 1e6;
  int record_every = 1;

  long steps() const;
  long trigger_step() const;
  void validate(double lambda) const;
};

struct MetricsSpec {
  int gap_index = 0;
  double target = 0.0;
  double band = 0.0;
  double pe_window = 20.0;
};

/// Everything a run needs, with laws and ground truth already synthesized.
struct Experiment {
  LinearDynamics dyn;
  AffineFeedbackLaw u1_star;
  AffineFeedbackLaw u2_star;
  AffineFeedbackLaw u2_insider;
  GroundTruth truth;             // of the insider law
  GroundTruth nominal;           // of the team law
  MitigationLaw law_star;        // full-knowledge mitigation optimum
  IdentifierConfig identifier;
  ProbingSchedule probing;
  MitigationCost mitigation;
  RecomputePolicy policy;
  PhasePlan plan;
  MetricsSpec metrics;
  Vector x0;
  RiccatiOptions riccati;

  Vector theta_star() const;  // reduced truth for the configured mode
};

struct Event {
  double t;
  std::string tag;
};

struct Metrics {
  double min_gap = 0.0;
  double final_gap = 0.0;
  double settling_time = 0.0;
  bool settled = false;
  bool collision_flag = false;
  double final_estimation_error = 0.0;
  double final_gain_error = 0.0;
  double pe_alpha0 = 0.0;
  double pe_alpha1 = 0.0;
  double band = 0.0;
  double target = 0.0;

  bool operator==(const Metrics& o) const;
};

struct Diagnostics {
  long law_updates = 0;
  long stale_holds = 0;
  long hurwitz_failures = 0;
  double l2_total = 0.0;
  double l2_tail = 0.0;
  long recenterings = 0;
  double max_state_norm = 0.0;
};

struct SimulationTrace {
  std::vector<double> t;
  std::vector<Vector> x, u1, u2, theta, phi;
  std::vector<double> est_err, gain_err;
  std::vector<Event> events;
  Metrics metrics;
  Diagnostics diagnostics;
  double dt = 0.0;  // sample spacing of the stored series
};

/// Deterministic closed-loop run. Throws Divergence or NonFinite.
SimulationTrace simulate(const Experiment& ex);

Metrics recompute_metrics(const SimulationTrace& trace, const MetricsSpec& spec);

/// One run per trigger time, executed concurrently.
std::vector<std::pair<double, Metrics>> sweep_trigger(const Experiment& base,
                                                      const std::vector<double>& triggers);

/// Steady amplitude of the tracked component under the probing input and the
/// full-knowledge mitigation loop (sum of per-sinusoid gains).
double probing_band(const Experiment& ex);

}  // namespace insider_sim
