#pragma once

#include <functional>
#include <string>
#include <vector>

namespace insider_sim {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct AcceptanceOptions {
  std::string fixture;  // empty: the shipped lane-change scenario
  std::string filter;   // substring of the criterion name; empty runs all
};

std::string default_fixture_path();

/// Runs the acceptance criteria in order, reporting each as it finishes.
std::vector<CriterionResult> run_acceptance(
    const AcceptanceOptions& options,
    const std::function<void(const CriterionResult&)>& on_result = {});

std::string format_result(const CriterionResult& r);

}  // namespace insider_sim
