#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "insider_sim/acceptance.hpp"
#include "insider_sim/errors.hpp"
#include "insider_sim/identifier.hpp"
#include "insider_sim/riccati.hpp"
#include "insider_sim/scenarios.hpp"
#include "insider_sim/sim_engine.hpp"
#include "insider_sim/trace_io.hpp"

namespace py = pybind11;
using namespace insider_sim;

namespace {

Matrix stack(const std::vector<Vector>& rows) {
  if (rows.empty()) return Matrix();
  Matrix out(rows.size(), rows[0].size());
  for (size_t i = 0; i < rows.size(); ++i) out.row(i) = rows[i].transpose();
  return out;
}

py::dict metrics_dict(const Metrics& m) {
  py::dict d;
  d["min_gap"] = m.min_gap;
  d["final_gap"] = m.final_gap;
  d["settling_time"] = m.settling_time;
  d["settled"] = m.settled;
  d["collision_flag"] = m.collision_flag;
  d["final_estimation_error"] = m.final_estimation_error;
  d["final_gain_error"] = m.final_gain_error;
  d["pe_alpha0"] = m.pe_alpha0;
  d["pe_alpha1"] = m.pe_alpha1;
  d["band"] = m.band;
  d["target"] = m.target;
  return d;
}

py::dict trace_dict(const SimulationTrace& tr) {
  py::dict d;
  d["t"] = Vector(Eigen::Map<const Vector>(tr.t.data(), tr.t.size()));
  d["x"] = stack(tr.x);
  d["u1"] = stack(tr.u1);
  d["u2"] = stack(tr.u2);
  d["theta"] = stack(tr.theta);
  d["phi"] = stack(tr.phi);
  d["est_err"] = Vector(Eigen::Map<const Vector>(tr.est_err.data(), tr.est_err.size()));
  d["gain_err"] = Vector(Eigen::Map<const Vector>(tr.gain_err.data(), tr.gain_err.size()));
  py::list events;
  for (const Event& e : tr.events) events.append(py::make_tuple(e.t, e.tag));
  d["events"] = events;
  d["metrics"] = metrics_dict(tr.metrics);
  d["metrics_text"] = metrics_text(tr);
  d["dt"] = tr.dt;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Insider-threat identification and mitigation simulator";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<Divergence>(m, "Divergence", base.ptr());
  py::register_exception<NotStabilizable>(m, "NotStabilizable", base.ptr());

  m.def(
      "solve_care",
      [](const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R) {
        const CareSolution s = solve_care({A, B, Q, R});
        return py::make_tuple(s.P, s.K, s.residual);
      },
      py::arg("A"), py::arg("B"), py::arg("Q"), py::arg("R"),
      "Stabilizing CARE solution. Returns (P, K, residual).");

  m.def(
      "pe_check",
      [](const Matrix& phi, double dt, double T0) {
        std::vector<Vector> rows(phi.rows());
        for (Eigen::Index i = 0; i < phi.rows(); ++i) rows[i] = phi.row(i).transpose();
        const PeCertificate c = pe_check(rows, dt, T0);
        return py::make_tuple(c.alpha0, c.alpha1);
      },
      py::arg("phi"), py::arg("dt"), py::arg("T0"));

  py::class_<ScenarioConfig>(m, "Scenario")
      .def_static(
          "load",
          [](const std::string& path, const std::vector<std::string>& sets) {
            return load_config(path, sets);
          },
          py::arg("path"), py::arg("overrides") = std::vector<std::string>{})
      .def_static(
          "parse",
          [](const std::string& text, const std::vector<std::string>& sets) {
            return parse_config(text, sets);
          },
          py::arg("text"), py::arg("overrides") = std::vector<std::string>{})
      .def("serialize", &serialize_config)
      .def_property(
          "mode", [](const ScenarioConfig& c) { return std::string(to_string(c.plan.mode)); },
          [](ScenarioConfig& c, const std::string& s) { c.plan.mode = mode_from_string(s); })
      .def_property(
          "t_end", [](const ScenarioConfig& c) { return c.plan.t_end; },
          [](ScenarioConfig& c, double v) { c.plan.t_end = v; });

  m.def(
      "simulate",
      [](const ScenarioConfig& cfg) {
        const Experiment ex = prepare_experiment(cfg);
        SimulationTrace tr;
        {
          py::gil_scoped_release release;
          tr = simulate(ex);
        }
        return trace_dict(tr);
      },
      py::arg("scenario"));

  m.def(
      "sweep_trigger",
      [](const ScenarioConfig& cfg, const std::vector<double>& triggers) {
        const Experiment ex = prepare_experiment(cfg);
        std::vector<std::pair<double, Metrics>> rows;
        {
          py::gil_scoped_release release;
          rows = sweep_trigger(ex, triggers);
        }
        py::list out;
        for (const auto& [t, mt] : rows) out.append(py::make_tuple(t, metrics_dict(mt)));
        return out;
      },
      py::arg("scenario"), py::arg("triggers"));

  m.def(
      "theta_star", [](const ScenarioConfig& cfg) { return prepare_experiment(cfg).theta_star(); },
      py::arg("scenario"));

  m.def("default_scenario_path", &default_fixture_path);
}
