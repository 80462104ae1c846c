#include "insider_sim/scenarios.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <regex>
#include <sstream>
#include <stdexcept>

#include "insider_sim/errors.hpp"

namespace insider_sim {
namespace {

// ---- value formatting ------------------------------------------------------

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double num(const std::string& s) {
  const std::string t = trim(s);
  if (t.empty()) throw std::invalid_argument("expected a number");
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || !std::isfinite(v)) {
    throw std::invalid_argument("'" + t + "' is not a finite number");
  }
  return v;
}

int integer(const std::string& s) {
  const double v = num(s);
  if (v != std::floor(v) || std::abs(v) > 1e9) {
    throw std::invalid_argument("'" + trim(s) + "' is not an integer");
  }
  return static_cast<int>(v);
}

bool boolean(const std::string& s) {
  const std::string t = trim(s);
  if (t == "true") return true;
  if (t == "false") return false;
  throw std::invalid_argument("expected true or false");
}

std::string fmt(const Vector& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += fmt(v(i));
  }
  return out;
}

Vector vec(const std::string& s) {
  if (trim(s).empty()) return Vector(0);
  const auto parts = split(s, ',');
  Vector v(static_cast<Eigen::Index>(parts.size()));
  for (size_t i = 0; i < parts.size(); ++i) v(static_cast<Eigen::Index>(i)) = num(parts[i]);
  return v;
}

std::vector<double> list(const std::string& s) {
  const Vector v = vec(s);
  return {v.data(), v.data() + v.size()};
}

std::string fmt(const std::vector<double>& v) {
  return fmt(Vector(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()))));
}

std::string fmt_matrix(const Matrix& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (i) out += "; ";
    out += fmt(Vector(m.row(i).transpose()));
  }
  return out;
}

Matrix mat(const std::string& s) {
  const auto rows = split(s, ';');
  if (rows.empty() || trim(s).empty()) throw std::invalid_argument("expected a matrix");
  std::vector<Vector> r;
  for (const auto& row : rows) r.push_back(vec(row));
  Matrix m(static_cast<Eigen::Index>(r.size()), r[0].size());
  for (size_t i = 0; i < r.size(); ++i) {
    if (r[i].size() != m.cols() || r[i].size() == 0) {
      throw std::invalid_argument("matrix rows must have equal, nonzero length");
    }
    m.row(static_cast<Eigen::Index>(i)) = r[i].transpose();
  }
  return m;
}

template <typename T>
std::string fmt_opt(const std::optional<T>& v, const char* empty) {
  return v ? fmt(*v) : std::string(empty);
}

std::optional<double> opt_num(const std::string& s, const char* empty) {
  if (trim(s) == empty) return std::nullopt;
  return num(s);
}

std::optional<Vector> opt_vec(const std::string& s, const char* empty) {
  if (trim(s) == empty) return std::nullopt;
  return vec(s);
}

Vector vec3(double a, double b, double c) {
  Vector v(3);
  v << a, b, c;
  return v;
}

Matrix diag3(double a, double b, double c) { return vec3(a, b, c).asDiagonal(); }

// ---- schema -----------------------------------------------------------------

enum ModelMask { kLane = 1, kCustom = 2, kBoth = 3 };

struct Field {
  const char* section;
  const char* key;
  int models;
  std::function<std::string(const ScenarioConfig&)> get;
  std::function<void(ScenarioConfig&, const std::string&)> set;
};

const std::vector<std::string>& sections() {
  static const std::vector<std::string> s = {"dynamics",        "team_cost", "insider_cost",
                                             "mitigation_cost", "identifier", "probing",
                                             "plan",            "output"};
  return s;
}

#define DOUBLE_FIELD(sec, key, models, member)                                     \
  Field {                                                                          \
    sec, key, models, [](const ScenarioConfig& c) { return fmt(c.member); },       \
        [](ScenarioConfig& c, const std::string& v) { c.member = num(v); }         \
  }
#define MATRIX_FIELD(sec, key, member)                                                 \
  Field {                                                                              \
    sec, key, kCustom, [](const ScenarioConfig& c) { return fmt_matrix(c.member); },  \
        [](ScenarioConfig& c, const std::string& v) { c.member = mat(v); }             \
  }
#define VECTOR_FIELD(sec, key, models, member)                                     \
  Field {                                                                          \
    sec, key, models, [](const ScenarioConfig& c) { return fmt(c.member); },       \
        [](ScenarioConfig& c, const std::string& v) { c.member = vec(v); }         \
  }

const std::vector<Field>& schema() {
  static const std::vector<Field> fields = {
      {"dynamics", "model", kBoth,
       [](const ScenarioConfig& c) {
         return std::string(c.model == DynamicsModel::LaneChange ? "lane_change" : "custom_linear");
       },
       [](ScenarioConfig& c, const std::string& v) {
         const std::string t = trim(v);
         if (t == "lane_change") c.model = DynamicsModel::LaneChange;
         else if (t == "custom_linear") c.model = DynamicsModel::CustomLinear;
         else throw std::invalid_argument("model must be lane_change or custom_linear");
       }},
      MATRIX_FIELD("dynamics", "a", custom.a),
      MATRIX_FIELD("dynamics", "b1", custom.b1),
      MATRIX_FIELD("dynamics", "b2", custom.b2),

      DOUBLE_FIELD("team_cost", "pi_safe", kLane, lane.pi_safe),
      DOUBLE_FIELD("team_cost", "v_c", kLane, lane.v_c),
      DOUBLE_FIELD("team_cost", "q1", kLane, lane.q1),
      DOUBLE_FIELD("team_cost", "q2", kLane, lane.q2),
      DOUBLE_FIELD("team_cost", "r1", kLane, lane.r1),
      DOUBLE_FIELD("team_cost", "r2", kLane, lane.r2),
      MATRIX_FIELD("team_cost", "qc", custom.qc),
      MATRIX_FIELD("team_cost", "r1", custom.r1),
      MATRIX_FIELD("team_cost", "r2", custom.r2),
      VECTOR_FIELD("team_cost", "x_ref", kCustom, custom.x_ref_c),

      DOUBLE_FIELD("insider_cost", "pi_tilde", kLane, lane.pi_tilde),
      {"insider_cost", "v_a", kLane, [](const ScenarioConfig& c) { return fmt_opt(c.lane.v_a, "auto"); },
       [](ScenarioConfig& c, const std::string& v) { c.lane.v_a = opt_num(v, "auto"); }},
      DOUBLE_FIELD("insider_cost", "q1", kLane, lane.q1_t),
      DOUBLE_FIELD("insider_cost", "q2", kLane, lane.q2_t),
      DOUBLE_FIELD("insider_cost", "r2", kLane, lane.r2_t),
      DOUBLE_FIELD("insider_cost", "rho", kLane, lane.rho),
      MATRIX_FIELD("insider_cost", "qa", custom.qa),
      MATRIX_FIELD("insider_cost", "r2", custom.r2_t),
      DOUBLE_FIELD("insider_cost", "rho", kCustom, custom.rho),
      VECTOR_FIELD("insider_cost", "x_ref", kCustom, custom.x_ref_a),

      DOUBLE_FIELD("mitigation_cost", "q1", kLane, lane.qm1),
      DOUBLE_FIELD("mitigation_cost", "q2", kLane, lane.qm2),
      DOUBLE_FIELD("mitigation_cost", "r1", kLane, lane.r1_t),
      MATRIX_FIELD("mitigation_cost", "qm", custom.qm),
      MATRIX_FIELD("mitigation_cost", "r1", custom.r1_t),
      {"mitigation_cost", "x_ref", kBoth, [](const ScenarioConfig& c) { return fmt_opt(c.x_ref_m, "auto"); },
       [](ScenarioConfig& c, const std::string& v) { c.x_ref_m = opt_vec(v, "auto"); }},
      {"mitigation_cost", "anchor", kBoth, [](const ScenarioConfig& c) { return fmt_opt(c.anchor, "team"); },
       [](ScenarioConfig& c, const std::string& v) { c.anchor = opt_vec(v, "team"); }},
      {"mitigation_cost", "anchor_weights", kBoth,
       [](const ScenarioConfig& c) { return fmt_opt(c.anchor_weights, "unit"); },
       [](ScenarioConfig& c, const std::string& v) { c.anchor_weights = opt_vec(v, "unit"); }},
      {"mitigation_cost", "recompute_every", kBoth,
       [](const ScenarioConfig& c) { return std::to_string(c.recompute_every); },
       [](ScenarioConfig& c, const std::string& v) { c.recompute_every = integer(v); }},
      DOUBLE_FIELD("mitigation_cost", "theta_threshold", kBoth, theta_threshold),

      DOUBLE_FIELD("identifier", "lambda", kBoth, lambda),
      DOUBLE_FIELD("identifier", "alpha", kBoth, gains.alpha),
      DOUBLE_FIELD("identifier", "beta", kBoth, gains.beta),
      DOUBLE_FIELD("identifier", "gamma", kBoth, gains.gamma),
      {"identifier", "normalization", kBoth,
       [](const ScenarioConfig& c) {
         switch (c.normalization) {
           case Normalization::Trace: return std::string("trace");
           case Normalization::Weighted: return std::string("weighted");
           default: return std::string("phi_squared");
         }
       },
       [](ScenarioConfig& c, const std::string& v) {
         const std::string t = trim(v);
         if (t == "phi_squared") c.normalization = Normalization::PhiSquared;
         else if (t == "trace") c.normalization = Normalization::Trace;
         else if (t == "weighted") c.normalization = Normalization::Weighted;
         else throw std::invalid_argument("normalization must be phi_squared, trace or weighted");
       }},
      {"identifier", "norm_weight", kBoth,
       [](const ScenarioConfig& c) { return c.norm_weight.size() ? fmt_matrix(c.norm_weight) : std::string("none"); },
       [](ScenarioConfig& c, const std::string& v) {
         c.norm_weight = trim(v) == "none" ? Matrix() : mat(v);
       }},
      {"identifier", "selector", kBoth,
       [](const ScenarioConfig& c) {
         if (!c.selector) return std::string("auto");
         std::string out;
         for (size_t i = 0; i < c.selector->size(); ++i) {
           if (i) out += ", ";
           out += std::to_string((*c.selector)[i] + 1);
         }
         return out;
       },
       [](ScenarioConfig& c, const std::string& v) {
         if (trim(v) == "auto") {
           c.selector.reset();
           return;
         }
         std::vector<int> rows;
         for (const auto& part : split(v, ',')) rows.push_back(integer(part) - 1);
         c.selector = rows;
       }},
      {"identifier", "transient_correction", kBoth,
       [](const ScenarioConfig& c) { return std::string(c.transient_correction ? "true" : "false"); },
       [](ScenarioConfig& c, const std::string& v) { c.transient_correction = boolean(v); }},
      {"identifier", "centering", kBoth,
       [](const ScenarioConfig& c) {
         switch (c.centering) {
           case Centering::Fixed: return std::string("fixed");
           case Centering::Window: return std::string("window");
           default: return std::string("none");
         }
       },
       [](ScenarioConfig& c, const std::string& v) {
         const std::string t = trim(v);
         if (t == "none") c.centering = Centering::None;
         else if (t == "fixed") c.centering = Centering::Fixed;
         else if (t == "window") c.centering = Centering::Window;
         else throw std::invalid_argument("centering must be none, fixed or window");
       }},
      {"identifier", "center", kBoth, [](const ScenarioConfig& c) { return fmt_opt(c.center, "initial"); },
       [](ScenarioConfig& c, const std::string& v) { c.center = opt_vec(v, "initial"); }},
      DOUBLE_FIELD("identifier", "center_window", kBoth, center_window),
      DOUBLE_FIELD("identifier", "center_tolerance", kBoth, center_tolerance),
      DOUBLE_FIELD("identifier", "bias_scale", kBoth, bias_scale),
      {"identifier", "theta0", kBoth,
       [](const ScenarioConfig& c) {
         switch (c.theta0_mode) {
           case Theta0Mode::Zero: return std::string("zero");
           case Theta0Mode::Explicit: return fmt(c.theta0);
           default: return std::string("nominal");
         }
       },
       [](ScenarioConfig& c, const std::string& v) {
         const std::string t = trim(v);
         if (t == "nominal") c.theta0_mode = Theta0Mode::Nominal;
         else if (t == "zero") c.theta0_mode = Theta0Mode::Zero;
         else {
           c.theta0_mode = Theta0Mode::Explicit;
           c.theta0 = vec(v);
         }
       }},

      {"probing", "amplitudes", kBoth, [](const ScenarioConfig& c) { return fmt(c.probing.signal.amplitudes); },
       [](ScenarioConfig& c, const std::string& v) { c.probing.signal.amplitudes = list(v); }},
      {"probing", "frequencies", kBoth, [](const ScenarioConfig& c) { return fmt(c.probing.signal.frequencies); },
       [](ScenarioConfig& c, const std::string& v) { c.probing.signal.frequencies = list(v); }},
      {"probing", "phases", kBoth, [](const ScenarioConfig& c) { return fmt(c.probing.signal.phases); },
       [](ScenarioConfig& c, const std::string& v) { c.probing.signal.phases = list(v); }},
      {"probing", "decay", kBoth,
       [](const ScenarioConfig& c) { return std::string(c.probing.decay_after_pe ? "after_pe" : "off"); },
       [](ScenarioConfig& c, const std::string& v) {
         const std::string t = trim(v);
         if (t == "off") c.probing.decay_after_pe = false;
         else if (t == "after_pe") c.probing.decay_after_pe = true;
         else throw std::invalid_argument("decay must be off or after_pe");
       }},
      DOUBLE_FIELD("probing", "decay_tau", kBoth, probing.decay_tau),
      DOUBLE_FIELD("probing", "pe_window", kBoth, probing.pe_window),
      DOUBLE_FIELD("probing", "pe_threshold", kBoth, probing.pe_threshold),

      {"plan", "mode", kBoth, [](const ScenarioConfig& c) { return std::string(to_string(c.plan.mode)); },
       [](ScenarioConfig& c, const std::string& v) {
         try {
           c.plan.mode = mode_from_string(trim(v));
         } catch (const ValidationError&) {
           throw std::invalid_argument("mode must be nominal, insider_unmitigated or identify_and_mitigate");
         }
       }},
      DOUBLE_FIELD("plan", "t_trigger", kBoth, plan.t_trigger),
      DOUBLE_FIELD("plan", "t_end", kBoth, plan.t_end),
      DOUBLE_FIELD("plan", "dt", kBoth, plan.dt),
      VECTOR_FIELD("plan", "x0", kBoth, x0),
      {"plan", "identify_from_trigger", kBoth,
       [](const ScenarioConfig& c) { return std::string(c.plan.identify_from_trigger ? "true" : "false"); },
       [](ScenarioConfig& c, const std::string& v) { c.plan.identify_from_trigger = boolean(v); }},
      DOUBLE_FIELD("plan", "divergence_bound", kBoth, plan.divergence_bound),
      {"plan", "record_every", kBoth, [](const ScenarioConfig& c) { return std::to_string(c.plan.record_every); },
       [](ScenarioConfig& c, const std::string& v) { c.plan.record_every = integer(v); }},
      {"plan", "gap_index", kBoth, [](const ScenarioConfig& c) { return std::to_string(c.gap_index + 1); },
       [](ScenarioConfig& c, const std::string& v) { c.gap_index = integer(v) - 1; }},
      {"plan", "target", kBoth, [](const ScenarioConfig& c) { return fmt_opt(c.target, "auto"); },
       [](ScenarioConfig& c, const std::string& v) { c.target = opt_num(v, "auto"); }},
      {"plan", "band", kBoth, [](const ScenarioConfig& c) { return fmt_opt(c.band, "auto"); },
       [](ScenarioConfig& c, const std::string& v) { c.band = opt_num(v, "auto"); }},

      {"output", "dir", kBoth, [](const ScenarioConfig& c) { return c.output_dir; },
       [](ScenarioConfig& c, const std::string& v) { c.output_dir = trim(v); }},
      {"output", "prefix", kBoth, [](const ScenarioConfig& c) { return c.output_prefix; },
       [](ScenarioConfig& c, const std::string& v) { c.output_prefix = trim(v); }},
  };
  return fields;
}

#undef DOUBLE_FIELD
#undef MATRIX_FIELD
#undef VECTOR_FIELD

int mask(DynamicsModel m) { return m == DynamicsModel::LaneChange ? kLane : kCustom; }

const Field* find_field(const std::string& section, const std::string& key, DynamicsModel model) {
  for (const auto& f : schema()) {
    if (section == f.section && key == f.key && (f.models & mask(model))) return &f;
  }
  return nullptr;
}

struct Entry {
  std::string value;
  int line;  // 0 for overrides
};

// ---- validation helpers ---------------------------------------------------------

void positive(double v, const char* field) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(field, "must be positive");
}
void nonnegative(double v, const char* field) {
  if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError(field, "must be nonnegative");
}

template <typename F>
void as_validation(const char* field, F&& f) {
  try {
    f();
  } catch (const ValidationError&) {
    throw;
  } catch (const Error& e) {
    throw ValidationError(field, e.what());
  }
}

}  // namespace

void LaneChangeParams::validate() const {
  positive(pi_safe, "team_cost.pi_safe");
  nonnegative(pi_tilde, "insider_cost.pi_tilde");
  if (!std::isfinite(v_c)) throw ValidationError("team_cost.v_c", "must be finite");
  if (v_a && !std::isfinite(*v_a)) throw ValidationError("insider_cost.v_a", "must be finite");
  positive(q1, "team_cost.q1");
  positive(q2, "team_cost.q2");
  positive(r1, "team_cost.r1");
  positive(r2, "team_cost.r2");
  nonnegative(q1_t, "insider_cost.q1");
  nonnegative(q2_t, "insider_cost.q2");
  positive(r2_t, "insider_cost.r2");
  if (!(rho > 0.0) || !std::isfinite(rho)) throw ValidationError("insider_cost.rho", "must satisfy rho > 0");
  positive(qm1, "mitigation_cost.q1");
  positive(qm2, "mitigation_cost.q2");
  positive(r1_t, "mitigation_cost.r1");
}

ScenarioConfig::ScenarioConfig() {
  probing.signal.amplitudes = {1.0, 1.0};
  probing.signal.frequencies = {0.5, 1.3};
  probing.signal.phases = {0.0, 0.0};
  plan.mode = Mode::IdentifyAndMitigate;
  plan.t_end = 100.0;
  plan.dt = 1e-3;
  plan.record_every = 10;
  x0 = vec3(60.0, 30.0, 30.0);
}

ScenarioConfig build_lane_change(const LaneChangeParams& p) {
  p.validate();
  ScenarioConfig c;
  c.model = DynamicsModel::LaneChange;
  c.lane = p;
  return c;
}

LinearDynamics lane_change_dynamics() {
  Matrix A(3, 3);
  A << 0, 1, -1, 0, 0, 0, 0, 0, 0;
  return LinearDynamics(A, vec3(0, 1, 0), vec3(0, 0, 1));
}

void validate_config(const ScenarioConfig& c) {
  Eigen::Index n = 3;
  Eigen::Index m = 1;
  if (c.model == DynamicsModel::LaneChange) {
    c.lane.validate();
  } else {
    const auto& u = c.custom;
    as_validation("dynamics.a", [&] { LinearDynamics(u.a, u.b1, u.b2); });
    n = u.a.rows();
    m = u.b1.cols();
    as_validation("team_cost", [&] { TeamCost{u.qc, u.r1, u.r2, u.x_ref_c}.validate(n, m); });
    if (!(u.rho > 0.0)) throw ValidationError("insider_cost.rho", "must satisfy rho > 0");
    as_validation("insider_cost", [&] { InsiderCost{u.qa, u.r2_t, u.rho, u.x_ref_a}.validate(n, m); });
    if (u.qm.rows() != n || u.qm.cols() != n) throw ValidationError("mitigation_cost.qm", "must be n x n");
    if (u.r1_t.rows() != m || u.r1_t.cols() != m) throw ValidationError("mitigation_cost.r1", "must be m x m");
    as_validation("mitigation_cost.qm", [&] { require_pd(u.qm, "Qm"); });
    as_validation("mitigation_cost.r1", [&] { require_pd(u.r1_t, "R1"); });
  }
  if (c.x_ref_m && c.x_ref_m->size() != n) throw ValidationError("mitigation_cost.x_ref", "needs n entries");
  if (c.anchor && c.anchor->size() != n) throw ValidationError("mitigation_cost.anchor", "needs n entries");
  if (c.anchor_weights) {
    if (c.anchor_weights->size() != n) throw ValidationError("mitigation_cost.anchor_weights", "needs n entries");
    if (!(c.anchor_weights->array() > 0.0).all()) {
      throw ValidationError("mitigation_cost.anchor_weights", "must be positive");
    }
  }
  if (c.recompute_every < 1) throw ValidationError("mitigation_cost.recompute_every", "must be at least 1");
  nonnegative(c.theta_threshold, "mitigation_cost.theta_threshold");

  positive(c.lambda, "identifier.lambda");
  c.gains.validate();
  if (c.normalization == Normalization::Weighted) {
    if (c.norm_weight.rows() != n + 1 || c.norm_weight.cols() != n + 1) {
      throw ValidationError("identifier.norm_weight", "must be (n+1) x (n+1) for weighted normalization");
    }
    as_validation("identifier.norm_weight", [&] { require_pd(c.norm_weight, "norm_weight"); });
  }
  if (c.selector) {
    if (c.selector->empty()) throw ValidationError("identifier.selector", "must name at least one row");
    for (int r : *c.selector) {
      if (r < 0 || r >= n) throw ValidationError("identifier.selector", "row out of range");
    }
  }
  if (c.center && c.center->size() != n) throw ValidationError("identifier.center", "needs n entries");
  positive(c.center_window, "identifier.center_window");
  nonnegative(c.center_tolerance, "identifier.center_tolerance");
  positive(c.bias_scale, "identifier.bias_scale");
  if (c.theta0_mode == Theta0Mode::Explicit) {
    const auto rows = c.selector ? static_cast<Eigen::Index>(c.selector->size()) : -1;
    if (rows > 0 && c.theta0.size() != rows * (n + 1)) {
      throw ValidationError("identifier.theta0", "needs selector rows * (n + 1) entries");
    }
  }

  as_validation("probing", [&] { c.probing.signal.validate(); });
  positive(c.probing.decay_tau, "probing.decay_tau");
  positive(c.probing.pe_window, "probing.pe_window");
  nonnegative(c.probing.pe_threshold, "probing.pe_threshold");

  c.plan.validate(c.lambda);
  if (c.x0.size() != n) throw ValidationError("plan.x0", "needs n entries");
  if (c.gap_index < 0 || c.gap_index >= n) throw ValidationError("plan.gap_index", "out of range");
  if (c.band) nonnegative(*c.band, "plan.band");
  if (c.output_prefix.empty()) throw ValidationError("output.prefix", "must not be empty");
  (void)m;
}

ScenarioConfig parse_config(const std::string& text, const std::vector<std::string>& overrides) {
  static const std::regex header(R"(^\[([a-z_]+)\]$)");
  static const std::regex kv(R"(^([a-z][a-z0-9_]*)\s*=\s*(.*)$)");
  std::map<std::pair<std::string, std::string>, Entry> entries;
  std::vector<std::pair<std::string, std::string>> order;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    std::smatch mt;
    if (std::regex_match(s, mt, header)) {
      section = mt[1];
      bool known = false;
      for (const auto& k : sections()) known |= k == section;
      if (!known) throw ParseError(line, "unknown section [" + section + "]");
      continue;
    }
    if (!std::regex_match(s, mt, kv)) throw ParseError(line, "expected 'key = value'");
    if (section.empty()) throw ParseError(line, "key outside of any section");
    const auto id = std::make_pair(section, std::string(mt[1]));
    if (entries.count(id)) throw ParseError(line, "duplicate key " + section + "." + id.second);
    entries[id] = {trim(mt[2]), line};
    order.push_back(id);
  }
  for (const auto& ov : overrides) {
    const auto eq = ov.find('=');
    const auto dot = ov.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
      throw ValidationError(ov, "override must look like section.key=value");
    }
    const auto id = std::make_pair(trim(ov.substr(0, dot)), trim(ov.substr(dot + 1, eq - dot - 1)));
    bool known = false;
    for (const auto& k : sections()) known |= k == id.first;
    if (!known) throw ValidationError(id.first + "." + id.second, "unknown section");
    if (!entries.count(id)) order.push_back(id);
    entries[id] = {trim(ov.substr(eq + 1)), 0};
  }

  ScenarioConfig cfg;
  auto apply = [&](const std::pair<std::string, std::string>& id) {
    const Entry& e = entries.at(id);
    const std::string name = id.first + "." + id.second;
    const Field* f = find_field(id.first, id.second, cfg.model);
    if (!f) {
      if (e.line) throw ParseError(e.line, "unknown key " + name);
      throw ValidationError(name, "unknown key");
    }
    try {
      f->set(cfg, e.value);
    } catch (const std::invalid_argument& err) {
      if (e.line) throw ParseError(e.line, name + ": " + err.what());
      throw ValidationError(name, err.what());
    }
  };
  const auto model_id = std::make_pair(std::string("dynamics"), std::string("model"));
  if (entries.count(model_id)) apply(model_id);
  for (const auto& id : order) {
    if (id != model_id) apply(id);
  }
  validate_config(cfg);
  return cfg;
}

ScenarioConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream f(path);
  if (!f) throw ParseError(0, "cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), overrides);
}

std::string serialize_config(const ScenarioConfig& cfg) {
  std::string out;
  for (const auto& sec : sections()) {
    out += "[" + sec + "]\n";
    for (const auto& f : schema()) {
      if (sec != f.section || !(f.models & mask(cfg.model))) continue;
      const std::string v = f.get(cfg);
      out += std::string(f.key) + " =" + (v.empty() ? "" : " " + v) + "\n";
    }
    if (sec != sections().back()) out += "\n";
  }
  return out;
}

Experiment prepare_experiment(const ScenarioConfig& cfg) {
  validate_config(cfg);
  Experiment ex;
  TeamCost team;
  InsiderCost icost;
  MitigationCost mcost;
  if (cfg.model == DynamicsModel::LaneChange) {
    const auto& p = cfg.lane;
    ex.dyn = lane_change_dynamics();
    team = {diag3(p.q1, p.q2, p.q2), Matrix::Constant(1, 1, p.r1), Matrix::Constant(1, 1, p.r2),
            vec3(p.pi_safe, p.v_c, p.v_c)};
    icost.Qa = diag3(p.q1_t, p.q1_t, p.q2_t);
    icost.R2 = Matrix::Constant(1, 1, p.r2_t);
    icost.rho = p.rho;
    mcost.Qm = diag3(p.qm1, p.qm2, p.qm2);
    mcost.R1 = Matrix::Constant(1, 1, p.r1_t);
  } else {
    const auto& u = cfg.custom;
    ex.dyn = LinearDynamics(u.a, u.b1, u.b2);
    team = {u.qc, u.r1, u.r2, u.x_ref_c};
    icost = {u.qa, u.r2_t, u.rho, u.x_ref_a};
    mcost.Qm = u.qm;
    mcost.R1 = u.r1_t;
  }
  const auto n = ex.dyn.n();
  const TeamSolution ts = solve_team(ex.dyn, team, ex.riccati);
  ex.u1_star = ts.u1;
  ex.u2_star = ts.u2;
  if (cfg.model == DynamicsModel::LaneChange) {
    const auto& p = cfg.lane;
    double va;
    if (p.v_a) {
      va = *p.v_a;
    } else {
      // Choose v_a so that K1*(x_c - x_a) = 0, i.e. x_a is an equilibrium under u1*.
      const Matrix& K1 = ts.u1.K;
      const double den = K1(0, 1) + K1(0, 2);
      if (std::abs(den) < 1e-12) throw ValidationError("insider_cost.v_a", "cannot be derived; set it");
      va = p.v_c + K1(0, 0) * (p.pi_safe - p.pi_tilde) / den;
    }
    icost.x_ref = vec3(p.pi_tilde, va, va);
  }
  const InsiderResponse resp = insider_best_response(ex.dyn, ts.u1, ts.u2, icost, ex.riccati);
  ex.u2_insider = resp.u2;
  ex.truth = make_ground_truth(ex.dyn, resp.u2);
  ex.nominal = make_ground_truth(ex.dyn, ts.u2);

  mcost.auto_reference = !cfg.x_ref_m.has_value();
  if (cfg.x_ref_m) mcost.x_ref = *cfg.x_ref_m;
  mcost.anchor = cfg.anchor ? *cfg.anchor : team.x_ref;
  if (cfg.anchor_weights) mcost.anchor_weights = *cfg.anchor_weights;
  ex.mitigation = mcost;
  ex.policy = {cfg.recompute_every, cfg.theta_threshold};

  IdentifierConfig& id = ex.identifier;
  id.lambda = cfg.lambda;
  id.gains = cfg.gains;
  id.normalization = cfg.normalization;
  id.norm_weight = cfg.norm_weight;
  id.selector = cfg.selector ? *cfg.selector : default_selector(ex.dyn.B2);
  if (id.selector.empty()) throw ValidationError("identifier.selector", "B2 has no nonzero row");
  id.transient_correction = cfg.transient_correction;
  id.centering = cfg.centering;
  if (cfg.center) id.center = *cfg.center;
  id.center_window = cfg.center_window;
  id.center_tolerance = cfg.center_tolerance;
  id.bias_scale = cfg.bias_scale;
  const auto dim = static_cast<Eigen::Index>(id.selector.size()) * (n + 1);
  switch (cfg.theta0_mode) {
    case Theta0Mode::Nominal:
      id.theta0 = pack_estimate(ex.nominal.Theta1, ex.nominal.Theta2, id.selector);
      break;
    case Theta0Mode::Zero:
      id.theta0 = Vector::Zero(dim);
      break;
    case Theta0Mode::Explicit:
      if (cfg.theta0.size() != dim) throw ValidationError("identifier.theta0", "wrong length");
      id.theta0 = cfg.theta0;
      break;
  }
  ex.law_star = synthesize_mitigation_law(ex.truth.Theta1, ex.truth.Theta2, ex.dyn, mcost,
                                          pack_estimate(ex.truth.Theta1, ex.truth.Theta2, id.selector),
                                          ex.riccati);
  ex.probing = cfg.probing;
  ex.plan = cfg.plan;
  ex.x0 = cfg.x0;
  ex.metrics.gap_index = cfg.gap_index;
  ex.metrics.target = cfg.target ? *cfg.target : team.x_ref(cfg.gap_index);
  ex.metrics.pe_window = cfg.probing.pe_window;
  ex.metrics.band = cfg.band ? *cfg.band : probing_band(ex) + 0.01 * std::abs(ex.metrics.target);
  return ex;
}

}  // namespace insider_sim
