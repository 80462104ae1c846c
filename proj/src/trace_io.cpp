#include "insider_sim/trace_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "insider_sim/errors.hpp"

namespace insider_sim {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trace_csv(const SimulationTrace& tr) {
  std::string out = "t";
  const auto n = tr.x.empty() ? 0 : tr.x[0].size();
  const auto m = tr.u1.empty() ? 0 : tr.u1[0].size();
  const auto p = tr.theta.empty() ? 0 : tr.theta[0].size();
  for (Eigen::Index i = 1; i <= n; ++i) out += ",x" + std::to_string(i);
  for (Eigen::Index i = 1; i <= m; ++i) out += ",u1_" + std::to_string(i);
  for (Eigen::Index i = 1; i <= m; ++i) out += ",u2_" + std::to_string(i);
  for (Eigen::Index i = 1; i <= p; ++i) out += ",theta_" + std::to_string(i);
  out += ",est_err,gain_err\n";
  for (size_t k = 0; k < tr.t.size(); ++k) {
    out += format_double(tr.t[k]);
    for (const Vector* v : {&tr.x[k], &tr.u1[k], &tr.u2[k], &tr.theta[k]}) {
      for (Eigen::Index i = 0; i < v->size(); ++i) out += "," + format_double((*v)(i));
    }
    out += "," + format_double(tr.est_err[k]) + "," + format_double(tr.gain_err[k]) + "\n";
  }
  return out;
}

std::string events_csv(const SimulationTrace& tr) {
  std::string out = "t,tag\n";
  for (const auto& e : tr.events) out += format_double(e.t) + "," + e.tag + "\n";
  return out;
}

std::string metrics_text(const SimulationTrace& tr) {
  const Metrics& m = tr.metrics;
  const Diagnostics& d = tr.diagnostics;
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  std::string out;
  out += "min_gap=" + format_double(m.min_gap) + "\n";
  out += "final_gap=" + format_double(m.final_gap) + "\n";
  out += "settling_time=" + format_double(m.settling_time) + "\n";
  out += "settled=" + b(m.settled) + "\n";
  out += "collision_flag=" + b(m.collision_flag) + "\n";
  out += "final_estimation_error=" + format_double(m.final_estimation_error) + "\n";
  out += "final_gain_error=" + format_double(m.final_gain_error) + "\n";
  out += "pe_alpha0=" + format_double(m.pe_alpha0) + "\n";
  out += "pe_alpha1=" + format_double(m.pe_alpha1) + "\n";
  out += "target=" + format_double(m.target) + "\n";
  out += "band=" + format_double(m.band) + "\n";
  out += "law_updates=" + std::to_string(d.law_updates) + "\n";
  out += "stale_holds=" + std::to_string(d.stale_holds) + "\n";
  out += "hurwitz_failures=" + std::to_string(d.hurwitz_failures) + "\n";
  out += "l2_total=" + format_double(d.l2_total) + "\n";
  out += "l2_tail=" + format_double(d.l2_tail) + "\n";
  out += "recenterings=" + std::to_string(d.recenterings) + "\n";
  out += "max_state_norm=" + format_double(d.max_state_norm) + "\n";
  return out;
}

std::string sweep_csv(const std::vector<std::pair<double, Metrics>>& rows) {
  std::string out = "t_trigger,settling_time,settled,min_gap,final_gap,collision_flag,final_estimation_error\n";
  for (const auto& [t, m] : rows) {
    out += format_double(t) + "," + format_double(m.settling_time) + "," +
           (m.settled ? "true" : "false") + "," + format_double(m.min_gap) + "," +
           format_double(m.final_gap) + "," + (m.collision_flag ? "true" : "false") + "," +
           format_double(m.final_estimation_error) + "\n";
  }
  return out;
}

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp" + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot write " + tmp.string());
    f << content;
    f.flush();
    if (!f) throw Error("short write to " + tmp.string());
  }
  fs::rename(tmp, target);
}

}  // namespace insider_sim
