#pragma once

#include <string>
#include <utility>
#include <vector>

#include "insider_sim/sim_engine.hpp"

namespace insider_sim {

std::string format_double(double v);  // %.17g

std::string trace_csv(const SimulationTrace& trace);
std::string events_csv(const SimulationTrace& trace);
std::string metrics_text(const SimulationTrace& trace);
std::string sweep_csv(const std::vector<std::pair<double, Metrics>>& rows);

/// Writes to a temporary sibling and renames it into place.
void write_atomic(const std::string& path, const std::string& content);

}  // namespace insider_sim
