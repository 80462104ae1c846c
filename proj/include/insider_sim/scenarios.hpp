#pragma once

#include <optional>
#include <string>
#include <vector>

#include "insider_sim/insider_response.hpp"
#include "insider_sim/mitigation.hpp"
#include "insider_sim/sim_engine.hpp"
#include "insider_sim/team_game.hpp"

namespace insider_sim {

enum class DynamicsModel { LaneChange, CustomLinear };

/// Two vehicles in one lane, x = [gap, v1, v2]; player 1 drives the leader.
struct LaneChangeParams {
  double pi_safe = 73.0;
  double pi_tilde = 0.0;
  double v_c = 30.0;
  std::optional<double> v_a;  // empty: the speed that makes x_a an equilibrium
  double q1 = 0.1, q2 = 5.0, r1 = 1.0, r2 = 1.0;
  double q1_t = 0.5, q2_t = 0.1, r2_t = 1.0, rho = 0.1;
  double qm1 = 0.1, qm2 = 5.0, r1_t = 1.0;

  void validate() const;
};

/// Explicit matrices for the custom_linear model.
struct CustomLinearParams {
  Matrix a, b1, b2;
  Matrix qc, r1, r2;
  Vector x_ref_c;
  Matrix qa, r2_t;
  double rho = 1.0;
  Vector x_ref_a;
  Matrix qm, r1_t;
};

enum class Theta0Mode { Nominal, Zero, Explicit };

struct ScenarioConfig {
  DynamicsModel model = DynamicsModel::LaneChange;
  LaneChangeParams lane;
  CustomLinearParams custom;

  // mitigation_cost, model independent part
  std::optional<Vector> x_ref_m;           // empty: auto
  std::optional<Vector> anchor;            // empty: team reference
  std::optional<Vector> anchor_weights;    // empty: unit weights
  int recompute_every = 10;
  double theta_threshold = 1e-3;

  // identifier
  double lambda = 1.0;
  DagGains gains;
  Normalization normalization = Normalization::PhiSquared;
  Matrix norm_weight;
  std::optional<std::vector<int>> selector;  // 0-based; empty: rows B2 touches
  bool transient_correction = true;
  Centering centering = Centering::None;
  std::optional<Vector> center;  // empty: initial state
  double center_window = 20.0;
  double center_tolerance = 0.0;
  double bias_scale = 1.0;
  Theta0Mode theta0_mode = Theta0Mode::Nominal;
  Vector theta0;

  ProbingSchedule probing;
  PhasePlan plan;
  Vector x0;
  int gap_index = 0;               // 0-based
  std::optional<double> target;    // empty: reference of the tracked component
  std::optional<double> band;      // empty: probing band + 1% of target

  std::string output_dir = "out";
  std::string output_prefix = "run";

  ScenarioConfig();
};

ScenarioConfig build_lane_change(const LaneChangeParams& p);

/// Parses a .scn document and applies section.key=value overrides before
/// validation. Throws ParseError or ValidationError.
ScenarioConfig parse_config(const std::string& text,
                            const std::vector<std::string>& overrides = {});
ScenarioConfig load_config(const std::string& path,
                           const std::vector<std::string>& overrides = {});
std::string serialize_config(const ScenarioConfig& cfg);

/// Semantic checks shared by parsing and programmatic construction.
void validate_config(const ScenarioConfig& cfg);

/// Synthesizes the team and insider laws, ground truth and defaults.
Experiment prepare_experiment(const ScenarioConfig& cfg);

/// Lane-change dynamics x = [gap, v1, v2].
LinearDynamics lane_change_dynamics();

}  // namespace insider_sim
