// Prints one PASS/FAIL line per acceptance criterion and a summary line.
// Exit status 4 if any criterion fails.
#include <algorithm>
#include <iostream>
#include <string>

#include "insider_sim/acceptance.hpp"

int main(int argc, char** argv) {
  insider_sim::AcceptanceOptions opt;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--fixture" && i + 1 < argc) {
      opt.fixture = argv[++i];
    } else if (a == "--filter" && i + 1 < argc) {
      opt.filter = argv[++i];
    } else {
      std::cerr << "usage: insider_sim_acceptance [--fixture path] [--filter text]\n";
      return 3;
    }
  }
  const auto results = insider_sim::run_acceptance(opt, [](const auto& r) {
    std::cout << insider_sim::format_result(r) << std::endl;
  });
  const auto passed =
      std::count_if(results.begin(), results.end(), [](const auto& r) { return r.passed; });
  std::cout << "summary passed=" << passed << " total=" << results.size() << std::endl;
  return passed == static_cast<long>(results.size()) && !results.empty() ? 0 : 4;
}
