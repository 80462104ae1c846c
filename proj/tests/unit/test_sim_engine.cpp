#include <cmath>

#include <gtest/gtest.h>

#include "insider_sim/errors.hpp"
#include "insider_sim/scenarios.hpp"
#include "insider_sim/sim_engine.hpp"

using namespace insider_sim;

namespace {

ScenarioConfig lane(Mode mode, double t_end) {
  ScenarioConfig c = load_config(std::string(INSIDER_SIM_SCENARIO_DIR) + "/lane_change_default.scn");
  c.plan.mode = mode;
  c.plan.t_end = t_end;
  return c;
}

}  // namespace

TEST(Mode, StringRoundTrip) {
  for (Mode m : {Mode::Nominal, Mode::InsiderUnmitigated, Mode::IdentifyAndMitigate}) {
    EXPECT_EQ(mode_from_string(to_string(m)), m);
  }
  EXPECT_THROW(mode_from_string("chaos"), ValidationError);
}

TEST(Simulate, NominalReachesSafeGap) {
  const SimulationTrace tr = simulate(prepare_experiment(lane(Mode::Nominal, 30.0)));
  EXPECT_NEAR(tr.metrics.final_gap, 73.0, 0.1);
  EXPECT_FALSE(tr.metrics.collision_flag);
  EXPECT_DOUBLE_EQ(tr.t.back(), 30.0);
}

TEST(Simulate, InsiderCausesCollision) {
  const SimulationTrace tr = simulate(prepare_experiment(lane(Mode::InsiderUnmitigated, 30.0)));
  EXPECT_LE(tr.metrics.min_gap, 0.0);
  EXPECT_TRUE(tr.metrics.collision_flag);
  bool tagged = false;
  for (const Event& e : tr.events) tagged = tagged || e.tag == "collision";
  EXPECT_TRUE(tagged);
}

TEST(Simulate, RepeatRunsAreBitIdentical) {
  const Experiment ex = prepare_experiment(lane(Mode::IdentifyAndMitigate, 10.0));
  const SimulationTrace a = simulate(ex), b = simulate(ex);
  ASSERT_EQ(a.x.size(), b.x.size());
  for (size_t i = 0; i < a.x.size(); ++i) {
    EXPECT_EQ(a.x[i], b.x[i]);
    EXPECT_EQ(a.theta[i], b.theta[i]);
  }
  EXPECT_TRUE(a.metrics == b.metrics);
}

TEST(Simulate, StoredMetricsMatchRecomputation) {
  const Experiment ex = prepare_experiment(lane(Mode::IdentifyAndMitigate, 20.0));
  const SimulationTrace tr = simulate(ex);
  EXPECT_TRUE(recompute_metrics(tr, ex.metrics) == tr.metrics);
}

TEST(Simulate, FourthOrderConvergence) {
  auto final_state = [](double dt) {
    ScenarioConfig c = lane(Mode::Nominal, 10.0);
    c.plan.dt = dt;
    return simulate(prepare_experiment(c)).x.back();
  };
  const Vector a = final_state(0.04), b = final_state(0.02), c = final_state(0.01);
  EXPECT_GE((a - b).norm() / (b - c).norm(), 8.0);
}

TEST(Simulate, TrueParameterStaysPut) {
  ScenarioConfig c = lane(Mode::IdentifyAndMitigate, 20.0);
  const Vector star = prepare_experiment(c).theta_star();
  c.theta0_mode = Theta0Mode::Explicit;
  c.theta0 = star;
  const SimulationTrace tr = simulate(prepare_experiment(c));
  for (double e : tr.est_err) EXPECT_LE(e, 1e-9);
}

TEST(Simulate, MitigationStopsCollision) {
  const SimulationTrace tr = simulate(prepare_experiment(lane(Mode::IdentifyAndMitigate, 60.0)));
  EXPECT_FALSE(tr.metrics.collision_flag);
  EXPECT_TRUE(tr.metrics.settled);
  EXPECT_EQ(tr.diagnostics.hurwitz_failures, 0);
  ASSERT_FALSE(tr.events.empty());
  EXPECT_EQ(tr.events.front().tag, "mitigation_on");
}

TEST(Simulate, LaterTriggerNeverSettlesSooner) {
  const Experiment ex = prepare_experiment(lane(Mode::IdentifyAndMitigate, 40.0));
  const auto rows = sweep_trigger(ex, {0.0, 2.0, 4.0});
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1].first, 2.0);
  for (size_t i = 1; i < rows.size(); ++i) {
    EXPECT_GE(rows[i].second.settling_time + ex.plan.dt, rows[i - 1].second.settling_time);
  }
}

TEST(Simulate, DivergenceIsReported) {
  ScenarioConfig c = lane(Mode::InsiderUnmitigated, 10.0);
  c.plan.divergence_bound = 55.0;
  EXPECT_THROW(simulate(prepare_experiment(c)), Divergence);
}

TEST(Plan, Validation) {
  PhasePlan p;
  p.dt = 0.5;
  EXPECT_THROW(p.validate(1.0), ValidationError);
  p.dt = 1e-3;
  p.t_trigger = 100.0;
  EXPECT_THROW(p.validate(1.0), ValidationError);
  p.t_trigger = 0.0;
  p.t_end = 1.00005;
  EXPECT_THROW(p.validate(1.0), ValidationError);
}

TEST(Probing, BandIsPositiveWithProbingAndZeroWithout) {
  ScenarioConfig c = lane(Mode::IdentifyAndMitigate, 10.0);
  EXPECT_GT(probing_band(prepare_experiment(c)), 0.0);
  for (double& a : c.probing.signal.amplitudes) a = 0.0;
  EXPECT_EQ(probing_band(prepare_experiment(c)), 0.0);
}
