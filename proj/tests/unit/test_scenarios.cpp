#include <random>

#include <gtest/gtest.h>

#include "insider_sim/errors.hpp"
#include "insider_sim/scenarios.hpp"
#include "insider_sim/trace_io.hpp"

using namespace insider_sim;

namespace {

const std::string kDefault = std::string(INSIDER_SIM_SCENARIO_DIR) + "/lane_change_default.scn";

const char* kCustom = R"(
[dynamics]
model = custom_linear
a = 0, 1; 0, -1
b1 = 0; 1
b2 = 1; 0

[team_cost]
qc = 1, 0; 0, 1
r1 = 1
r2 = 1
x_ref = 1, 0

[insider_cost]
qa = 2, 0; 0, 1
r2 = 1
rho = 0.5
x_ref = 0, 0

[mitigation_cost]
qm = 1, 0; 0, 1
r1 = 1

[plan]
t_end = 5
x0 = 0, 0
)";

}  // namespace

TEST(Config, DefaultFileRoundTrips) {
  const ScenarioConfig c = load_config(kDefault);
  const std::string text = serialize_config(c);
  EXPECT_EQ(serialize_config(parse_config(text)), text);
  EXPECT_EQ(c.gap_index, 0);
  EXPECT_EQ(c.output_prefix, "lane_change");
}

TEST(Config, RandomOverridesRoundTrip) {
  std::mt19937_64 g(1);
  std::uniform_real_distribution<double> u(0.05, 10.0);
  auto num = [&] { return format_double(u(g)); };
  for (int trial = 0; trial < 50; ++trial) {
    const std::vector<std::string> sets = {
        "team_cost.q1=" + num(),       "team_cost.q2=" + num(),
        "insider_cost.rho=" + num(),   "insider_cost.q1=" + num(),
        "identifier.gamma=" + num(),   "identifier.beta=" + num(),
        "probing.amplitudes=" + num() + "," + num(),
        "plan.x0=" + num() + "," + num() + "," + num(),
        "plan.t_end=" + std::to_string(10 + trial),
        "identifier.centering=" + std::string(trial % 2 ? "window" : "none"),
    };
    const ScenarioConfig c = parse_config("", sets);
    const std::string text = serialize_config(c);
    EXPECT_EQ(serialize_config(parse_config(text)), text) << "trial " << trial;
  }
}

TEST(Config, CustomModelParsesAndRuns) {
  const ScenarioConfig c = parse_config(kCustom);
  EXPECT_EQ(c.model, DynamicsModel::CustomLinear);
  const std::string text = serialize_config(c);
  EXPECT_EQ(serialize_config(parse_config(text)), text);
  EXPECT_NO_THROW(simulate(prepare_experiment(c)));
}

TEST(Config, UnknownKeyReportsLine) {
  try {
    parse_config("[team_cost]\nq1 = 1\nspeed = 3\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
  }
}

TEST(Config, Rejections) {
  EXPECT_THROW(parse_config("[nowhere]\n"), ParseError);
  EXPECT_THROW(parse_config("[plan]\nt_end = 5\nt_end = 6\n"), ParseError);
  EXPECT_THROW(parse_config("q1 = 1\n"), ParseError);
  EXPECT_THROW(parse_config("[plan]\nt_end = soon\n"), ParseError);
  EXPECT_THROW(parse_config("", {"insider_cost.rho=0"}), ValidationError);
  EXPECT_THROW(parse_config("[insider_cost]\nrho = 0\n"), Error);
  EXPECT_THROW(parse_config("", {"identifier.bogus=1"}), ValidationError);
  EXPECT_THROW(parse_config("", {"no_equals_sign"}), ValidationError);
  EXPECT_THROW(parse_config("", {"plan.dt=0.5"}), ValidationError);
}

TEST(Config, AutoInsiderSpeedMakesReferenceAnEquilibrium) {
  const LaneChangeParams p;
  const Experiment ex = prepare_experiment(build_lane_change(p));
  const Matrix& K1 = ex.u1_star.K;
  const double v_a = p.v_c + K1(0, 0) * (p.pi_safe - p.pi_tilde) / (K1(0, 1) + K1(0, 2));
  const Vector x_a = Eigen::Vector3d(p.pi_tilde, v_a, v_a);
  EXPECT_LE(check_insider_reference(ex.dyn, ex.u1_star, x_a), 1e-9);
  EXPECT_LE((ex.u2_insider.k + ex.u2_insider.K * x_a).norm(), 1e-9);
}
