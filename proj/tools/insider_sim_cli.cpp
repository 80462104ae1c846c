// insider-sim: run lane-change and custom scenarios, sweep trigger times,
// and execute the acceptance suite.
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "insider_sim/acceptance.hpp"
#include "insider_sim/errors.hpp"
#include "insider_sim/scenarios.hpp"
#include "insider_sim/sim_engine.hpp"
#include "insider_sim/trace_io.hpp"

namespace is = insider_sim;

namespace {

constexpr int kOk = 0;
constexpr int kDivergence = 2;
constexpr int kInvalid = 3;
constexpr int kAcceptance = 4;

std::string output_dir(const std::string& flag, const is::ScenarioConfig& cfg) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("INSIDER_SIM_OUT"); env && *env) return env;
  return cfg.output_dir;
}

std::string join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

std::string matrix_line(const is::Matrix& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (i) out += "; ";
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += ", ";
      out += is::format_double(m(i, j));
    }
  }
  return out;
}

std::vector<double> parse_triggers(const std::string& s) {
  std::vector<double> out;
  std::stringstream in(s);
  std::string part;
  while (std::getline(in, part, ',')) {
    char* end = nullptr;
    const double v = std::strtod(part.c_str(), &end);
    if (part.empty() || *end != '\0') throw is::ValidationError("triggers", "bad value '" + part + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Insider-threat identification and mitigation simulator"};
  app.require_subcommand(1);

  std::string config, out, triggers = "0,2,4", filter, fixture;
  std::vector<std::string> sets;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("config", config, "Scenario file (.scn)")->required();
    sub->add_option("--set", sets, "Override, section.key=value (repeatable)");
  };
  auto* run = app.add_subcommand("run", "Simulate one scenario and write trace, events and metrics");
  add_config(run);
  run->add_option("--out", out, "Output directory");
  auto* sweep = app.add_subcommand("sweep-trigger", "Simulate once per mitigation trigger time");
  add_config(sweep);
  sweep->add_option("--triggers", triggers, "Comma-separated trigger times in seconds");
  sweep->add_option("--out", out, "Output directory");
  auto* validate = app.add_subcommand("validate", "Parse and validate a scenario, print canonical form");
  add_config(validate);
  auto* gains = app.add_subcommand("print-gains", "Print team, insider and mitigation gains");
  add_config(gains);
  auto* acc = app.add_subcommand("acceptance", "Run the acceptance suite");
  acc->add_option("--filter", filter, "Run criteria whose name contains this text");
  acc->add_option("--fixture", fixture, "Scenario fixture to use");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    if (*acc) {
      is::AcceptanceOptions opt{fixture, filter};
      bool ok = true;
      const auto results = is::run_acceptance(opt, [&](const is::CriterionResult& r) {
        std::cout << is::format_result(r) << std::endl;
        ok = ok && r.passed;
      });
      std::cout << "summary passed=" << std::count_if(results.begin(), results.end(),
                                                      [](const auto& r) { return r.passed; })
                << " total=" << results.size() << std::endl;
      return ok && !results.empty() ? kOk : kAcceptance;
    }

    const is::ScenarioConfig cfg = is::load_config(config, sets);
    if (*validate) {
      std::cout << is::serialize_config(cfg);
      return kOk;
    }
    const is::Experiment ex = is::prepare_experiment(cfg);
    if (*gains) {
      std::cout << "K1_star=" << matrix_line(ex.u1_star.K) << "\n"
                << "k1_star=" << matrix_line(ex.u1_star.k.transpose()) << "\n"
                << "K2_star=" << matrix_line(ex.u2_star.K) << "\n"
                << "k2_star=" << matrix_line(ex.u2_star.k.transpose()) << "\n"
                << "K2_insider=" << matrix_line(ex.u2_insider.K) << "\n"
                << "k2_insider=" << matrix_line(ex.u2_insider.k.transpose()) << "\n"
                << "theta_star=" << matrix_line(ex.theta_star().transpose()) << "\n"
                << "theta0=" << matrix_line(ex.identifier.theta0.transpose()) << "\n"
                << "K1_mitigation=" << matrix_line(ex.law_star.K) << "\n"
                << "k1_mitigation=" << matrix_line(ex.law_star.k.transpose()) << "\n"
                << "x_ref_mitigation=" << matrix_line(ex.law_star.x_ref.transpose()) << "\n"
                << "band=" << is::format_double(ex.metrics.band) << "\n";
      return kOk;
    }
    const std::string dir = output_dir(out, cfg);
    const std::string prefix = cfg.output_prefix;
    if (*run) {
      const is::SimulationTrace tr = is::simulate(ex);
      is::write_atomic(join(dir, prefix + "_trace.csv"), is::trace_csv(tr));
      is::write_atomic(join(dir, prefix + "_events.csv"), is::events_csv(tr));
      const std::string metrics = is::metrics_text(tr);
      is::write_atomic(join(dir, prefix + "_metrics.txt"), metrics);
      std::cout << metrics;
      return kOk;
    }
    if (*sweep) {
      const auto rows = is::sweep_trigger(ex, parse_triggers(triggers));
      is::write_atomic(join(dir, prefix + "_sweep.csv"), is::sweep_csv(rows));
      std::cout << is::sweep_csv(rows);
      return kOk;
    }
  } catch (const is::Divergence& e) {
    std::cerr << "divergence at t=" << e.time() << ": " << e.what() << "\n";
    return kDivergence;
  } catch (const is::NonFinite& e) {
    std::cerr << "non-finite state: " << e.what() << "\n";
    return kDivergence;
  } catch (const is::ParseError& e) {
    std::cerr << config << ":" << e.what() << "\n";
    return kInvalid;
  } catch (const is::ValidationError& e) {
    std::cerr << "invalid " << e.what() << "\n";
    return kInvalid;
  } catch (const is::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kOk;
}
