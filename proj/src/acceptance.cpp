#include "insider_sim/acceptance.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <optional>
#include <random>

#include "insider_sim/errors.hpp"
#include "insider_sim/identifier.hpp"
#include "insider_sim/insider_response.hpp"
#include "insider_sim/riccati.hpp"
#include "insider_sim/scenarios.hpp"
#include "insider_sim/sim_engine.hpp"
#include "insider_sim/team_game.hpp"

namespace insider_sim {
namespace {

using Clock = std::chrono::steady_clock;

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

struct Rng {
  std::mt19937_64 gen;
  std::normal_distribution<double> normal{0.0, 1.0};
  explicit Rng(std::uint64_t seed) : gen(seed) {}
  int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen); }
  Matrix gauss(Eigen::Index r, Eigen::Index c) {
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(gen);
    return m;
  }
  Matrix spd(Eigen::Index n, double floor) {
    const Matrix g = gauss(n, n);
    return g * g.transpose() / static_cast<double>(n) + floor * Matrix::Identity(n, n);
  }
};

// Shared state across criteria: the fixture and the identify-and-mitigate run.
struct Context {
  std::string fixture;
  std::optional<ScenarioConfig> cfg;
  std::optional<SimulationTrace> idm;

  const ScenarioConfig& config() {
    if (!cfg) cfg = load_config(fixture);
    return *cfg;
  }
  ScenarioConfig variant(Mode mode) {
    ScenarioConfig c = config();
    c.plan.mode = mode;
    return c;
  }
  const SimulationTrace& idm_run() {
    if (!idm) idm = simulate(prepare_experiment(variant(Mode::IdentifyAndMitigate)));
    return *idm;
  }
};

using Check = std::pair<bool, std::string>;

constexpr double kPbhMargin = 1e-3;

Check riccati_correctness(Context&) {
  Rng rng(20240601);
  double worst = 0.0;
  int hurwitz = 0, solved = 0;
  while (solved < 200) {
    const int n = rng.uniform_int(1, 6), p = rng.uniform_int(1, 3);
    CareProblem pr{rng.gauss(n, n), rng.gauss(n, p), rng.spd(n, 0.1), rng.spd(p, 0.5)};
    // Stabilizable with a PBH margin that double precision can resolve.
    if (!is_stabilizable(pr.A, pr.B, kPbhMargin)) continue;
    const CareSolution s = solve_care(pr);
    worst = std::max(worst, care_residual(pr, s.P));
    hurwitz += is_hurwitz(pr.A - pr.B * s.K);
    ++solved;
  }
  const Matrix one = Matrix::Ones(1, 1);
  const double p1 = solve_care({Matrix::Zero(1, 1), one, one, one}).P(0, 0);
  const double p2 = solve_care({one, one, one, one}).P(0, 0);
  const double scalar_err = std::max(std::abs(p1 - 1.0), std::abs(p2 - (1.0 + std::sqrt(2.0))));
  const bool ok = worst <= 1e-8 && hurwitz == 200 && scalar_err <= 1e-10;
  return {ok, fmt("max residual %.3g, hurwitz %.0f/200, scalar error %.3g", worst, hurwitz,
                  scalar_err)};
}

Check regressor_identity(Context&) {
  Rng rng(7);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = rng.uniform_int(1, 6), rows = rng.uniform_int(1, n);
    const Matrix Theta = rng.gauss(rows, n + 1);
    const Vector phi = rng.gauss(n + 1, 1);
    const Vector theta = vec_rows(Theta.leftCols(n), Theta.col(n));
    const Vector want = Theta * phi;
    const Vector got = build_parameter_map(phi, rows).apply(theta);
    const double scale = std::max(want.norm(), Theta.norm() * phi.norm());
    worst = std::max(worst, (got - want).norm() / scale);
  }
  return {worst <= 1e-12, fmt("max relative error %.3g over 1000 draws", worst)};
}

Check cross_term_equivalence(Context&) {
  Rng rng(99);
  double worst = 0.0;
  int solved = 0;
  while (solved < 50) {
    const int n = rng.uniform_int(2, 5), m = rng.uniform_int(1, 2);
    const Matrix A = rng.gauss(n, n), B1 = rng.gauss(n, m), B2 = rng.gauss(n, m);
    Matrix B(n, 2 * m);
    B << B1, B2;
    if (!is_stabilizable(A, B) || !is_stabilizable(A, B1)) continue;
    const LinearDynamics dyn(A, B1, B2);
    const TeamCost team{rng.spd(n, 0.5), rng.spd(m, 0.5), rng.spd(m, 0.5), rng.gauss(n, 1)};
    const TeamSolution ts = solve_team(dyn, team);
    if (!is_stabilizable(A - B1 * ts.u1.K, B2)) continue;
    const InsiderCost ic{rng.spd(n, 0.1), rng.spd(m, 0.5), rng.uniform(0.05, 2.0),
                         rng.gauss(n, 1)};
    const InsiderResponse r = insider_best_response(dyn, ts.u1, ts.u2, ic);
    const double res = cross_care_residual(insider_problem(dyn, ts.u1.K, ts.u2.K, ic), r.P);
    worst = std::max(worst, res);
    ++solved;
  }
  return {worst <= 1e-8, fmt("max cross-weighted residual %.3g over 50 instances", worst)};
}

Check nominal_lane_change(Context& ctx) {
  ScenarioConfig c = ctx.variant(Mode::Nominal);
  c.plan.t_end = 30.0;
  c.plan.dt = 1e-3;
  const auto t0 = Clock::now();
  const SimulationTrace tr = simulate(prepare_experiment(c));
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  const Metrics& mt = tr.metrics;
  const bool ok = std::abs(mt.final_gap - 73.0) <= 0.1 && !mt.collision_flag && secs < 10.0;
  return {ok, fmt("final gap %.6g, min gap %.6g, %.3g s", mt.final_gap, mt.min_gap, secs)};
}

Check insider_collision(Context& ctx) {
  const SimulationTrace tr = simulate(prepare_experiment(ctx.variant(Mode::InsiderUnmitigated)));
  return {tr.metrics.min_gap <= 0.0, fmt("min gap %.6g", tr.metrics.min_gap)};
}

// Slope of log(err) against t over the second half of the run.
double exponential_rate(const SimulationTrace& tr) {
  const double half = 0.5 * tr.t.back();
  double st = 0, sy = 0, stt = 0, sty = 0;
  long n = 0;
  for (std::size_t i = 0; i < tr.t.size(); ++i) {
    if (tr.t[i] < half || !(tr.est_err[i] > 0.0)) continue;
    const double y = std::log(tr.est_err[i]);
    st += tr.t[i];
    sy += y;
    stt += tr.t[i] * tr.t[i];
    sty += tr.t[i] * y;
    ++n;
  }
  if (n < 2) return 0.0;
  const double den = n * stt - st * st;
  return den > 0.0 ? -(n * sty - st * sy) / den : 0.0;
}

Check identification(Context& ctx) {
  const SimulationTrace& tr = ctx.idm_run();
  const double theta_star =
      prepare_experiment(ctx.variant(Mode::IdentifyAndMitigate)).theta_star().norm();
  const double rel = tr.est_err.back() / theta_star;
  const double rate = exponential_rate(tr);
  return {rel <= 1e-3 && rate > 0.0,
          fmt("final |theta - theta*| / |theta*| = %.3g, fitted rate %.3g", rel, rate)};
}

Check mitigation_recovery(Context& ctx) {
  const Metrics& mt = ctx.idm_run().metrics;
  const double miss = std::abs(mt.final_gap - mt.target);
  const bool ok = miss <= mt.band && mt.final_gain_error <= 1e-3;
  return {ok, fmt("|final gap - target| %.4g (band %.4g), gain error %.3g", miss, mt.band,
                  mt.final_gain_error)};
}

Check response_timing(Context& ctx) {
  const Experiment ex = prepare_experiment(ctx.variant(Mode::IdentifyAndMitigate));
  const auto rows = sweep_trigger(ex, {0.0, 2.0, 4.0});
  bool ok = true;
  std::string detail = "settling";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Metrics& m = rows[i].second;
    ok = ok && m.settled;
    if (i) ok = ok && m.settling_time + ex.plan.dt >= rows[i - 1].second.settling_time;
    detail += fmt(" %.4g", m.settling_time);
  }
  return {ok, detail + " s at triggers 0, 2, 4"};
}

Check identifier_fixed_point(Context& ctx) {
  ScenarioConfig c = ctx.variant(Mode::IdentifyAndMitigate);
  const Vector star = prepare_experiment(c).theta_star();
  c.theta0_mode = Theta0Mode::Explicit;
  c.theta0 = star;
  c.plan.t_end = 30.0;
  c.plan.record_every = 1;
  const SimulationTrace tr = simulate(prepare_experiment(c));
  double sup = 0.0;
  for (double e : tr.est_err) sup = std::max(sup, e);
  return {sup <= 1e-9, fmt("sup |theta - theta*| = %.3g", sup)};
}

Check pe_certificate(Context& ctx) {
  const double threshold = ctx.config().probing.pe_threshold;
  const double T0 = ctx.config().probing.pe_window;
  const SimulationTrace& probed = ctx.idm_run();
  const PeCertificate on = pe_check(probed.phi, probed.dt, T0);

  ScenarioConfig c = ctx.variant(Mode::IdentifyAndMitigate);
  for (double& a : c.probing.signal.amplitudes) a = 0.0;
  const SimulationTrace quiet = simulate(prepare_experiment(c));
  const std::vector<Vector> tail(quiet.phi.begin() + quiet.phi.size() / 2, quiet.phi.end());
  const PeCertificate off = pe_check(tail, quiet.dt, T0);

  const bool ok = on.alpha0 > threshold * on.alpha1 && off.alpha0 <= threshold * off.alpha1;
  return {ok, fmt("probed alpha0/alpha1 %.3g, unprobed %.3g, threshold %.3g",
                  on.alpha0 / on.alpha1, off.alpha0 / off.alpha1, threshold)};
}

Check appendix_diagnostics(Context& ctx) {
  const Diagnostics& d = ctx.idm_run().diagnostics;
  const bool ok = d.law_updates > 0 && d.hurwitz_failures == 0 && d.l2_tail <= 0.1 * d.l2_total;
  return {ok, fmt("hurwitz failures %.0f, l2 tail/total %.3g over %.0f laws",
                  static_cast<double>(d.hurwitz_failures),
                  d.l2_total > 0 ? d.l2_tail / d.l2_total : 0.0,
                  static_cast<double>(d.law_updates))};
}

Check determinism_and_order(Context& ctx) {
  ScenarioConfig c = ctx.variant(Mode::IdentifyAndMitigate);
  c.plan.t_end = 20.0;
  const Experiment ex = prepare_experiment(c);
  const SimulationTrace a = simulate(ex), b = simulate(ex);
  bool same = a.t == b.t && a.x.size() == b.x.size() && a.metrics == b.metrics;
  for (std::size_t i = 0; same && i < a.x.size(); ++i) {
    same = a.x[i] == b.x[i] && a.theta[i] == b.theta[i] && a.u1[i] == b.u1[i];
  }

  auto final_state = [&](double dt) {
    ScenarioConfig n = ctx.variant(Mode::Nominal);
    n.plan.t_end = 10.0;
    n.plan.dt = dt;
    n.plan.record_every = 1;
    return simulate(prepare_experiment(n)).x.back();
  };
  const Vector h1 = final_state(0.04), h2 = final_state(0.02), h4 = final_state(0.01);
  const double ratio = (h1 - h2).norm() / (h2 - h4).norm();
  return {same && ratio >= 8.0,
          std::string(same ? "repeat runs identical" : "repeat runs differ") +
              fmt(", step-halving ratio %.4g", ratio)};
}

struct Criterion {
  int id;
  const char* name;
  Check (*run)(Context&);
};

const Criterion kCriteria[] = {
    {1, "riccati_correctness", riccati_correctness},
    {2, "regressor_identity", regressor_identity},
    {3, "cross_term_equivalence", cross_term_equivalence},
    {4, "nominal_lane_change", nominal_lane_change},
    {5, "insider_collision", insider_collision},
    {6, "identification", identification},
    {7, "mitigation_recovery", mitigation_recovery},
    {8, "response_timing", response_timing},
    {9, "identifier_fixed_point", identifier_fixed_point},
    {10, "pe_certificate", pe_certificate},
    {11, "appendix_diagnostics", appendix_diagnostics},
    {12, "determinism_and_rk4_order", determinism_and_order},
};

}  // namespace

std::string default_fixture_path() {
  return std::string(INSIDER_SIM_SCENARIO_DIR) + "/lane_change_default.scn";
}

std::vector<CriterionResult> run_acceptance(
    const AcceptanceOptions& options, const std::function<void(const CriterionResult&)>& on_result) {
  Context ctx;
  ctx.fixture = options.fixture.empty() ? default_fixture_path() : options.fixture;
  std::vector<CriterionResult> out;
  for (const Criterion& c : kCriteria) {
    if (!options.filter.empty() && std::string(c.name).find(options.filter) == std::string::npos) {
      continue;
    }
    CriterionResult r;
    r.id = c.id;
    r.name = c.name;
    const auto t0 = Clock::now();
    try {
      std::tie(r.passed, r.detail) = c.run(ctx);
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("error: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    if (on_result) on_result(r);
    out.push_back(r);
  }
  return out;
}

std::string format_result(const CriterionResult& r) {
  return std::string(r.passed ? "PASS" : "FAIL") + " " + std::to_string(r.id) + " " + r.name +
         ": " + r.detail + fmt(" (%.2f s)", r.seconds);
}

}  // namespace insider_sim
