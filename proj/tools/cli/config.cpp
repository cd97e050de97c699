#include "config.hpp"

#include "cbfsafe/errors.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <utility>
#include <vector>

namespace cbfsafe::cli {

namespace pt = boost::property_tree;

namespace {

template <class T>
using Field = std::pair<const char*, double T::*>;

const std::vector<Field<scenarios::VehicleParams>>& vehicle_fields() {
  using V = scenarios::VehicleParams;
  static const std::vector<Field<V>> f = {
      {"mass", &V::mass}, {"f0", &V::f0},   {"f1", &V::f1},   {"f2", &V::f2},
      {"c_d", &V::c_d},   {"c_a", &V::c_a}, {"v_desired", &V::v_desired},
      {"k1", &V::k1},     {"k2", &V::k2},   {"l_f", &V::l_f}, {"c3", &V::c3},
      {"p", &V::p},       {"epsilon", &V::epsilon},           {"a0", &V::a0},
      {"x0", &V::x0},     {"v0", &V::v0},
  };
  return f;
}

const std::vector<Field<scenarios::SaccParams>>& sacc_fields() {
  using S = scenarios::SaccParams;
  static const std::vector<Field<S>> f = {
      {"v_p", &S::v_p},     {"l_p", &S::l_p},     {"k1", &S::k1},           {"k2", &S::k2},
      {"u_min", &S::u_min}, {"u_max", &S::u_max}, {"k_f", &S::k_f},         {"epsilon", &S::epsilon},
      {"a0", &S::a0},       {"p", &S::p},         {"z0", &S::z0},           {"v0", &S::v0},
  };
  return f;
}

template <class T>
bool assign(T& target, const std::vector<Field<T>>& fields, const std::string& key,
            const std::string& value, const std::string& where) {
  for (const auto& [name, member] : fields) {
    if (key == name) {
      target.*member = parse_double(value, where + "." + key);
      return true;
    }
  }
  return false;
}

template <class T>
void dump(std::ostream& out, const T& src, const std::vector<Field<T>>& fields) {
  for (const auto& [name, member] : fields) out << name << " = " << format_double(src.*member) << "\n";
}

int parse_int(const std::string& text, const std::string& what) {
  int v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ConfigError(what + ": not an integer: '" + text + "'");
  return v;
}

}  // namespace

std::string_view to_string(ScenarioKind kind) {
  return kind == ScenarioKind::Acc ? "acc" : "sacc";
}

ScenarioKind parse_scenario(std::string_view text) {
  if (text == "acc") return ScenarioKind::Acc;
  if (text == "sacc") return ScenarioKind::Sacc;
  throw ConfigError("unknown scenario '" + std::string(text) + "' (expected acc or sacc)");
}

bool parse_on_off(std::string_view text) {
  if (text == "on" || text == "true" || text == "1") return true;
  if (text == "off" || text == "false" || text == "0") return false;
  throw ConfigError("expected on or off, got '" + std::string(text) + "'");
}

double parse_double(std::string_view text, std::string_view what) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v))
    throw ConfigError(std::string(what) + ": not a finite number: '" + std::string(text) + "'");
  return v;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(std::numeric_limits<double>::max_digits10);
  os << v;
  return os.str();
}

RunConfig RunConfig::defaults(int case_id) {
  RunConfig c;
  c.case_id = case_id;
  c.platoon = scenarios::PlatoonParams::defaults(case_id);
  return c;
}

scenarios::Scenario RunConfig::build() const {
  return scenario == ScenarioKind::Acc ? scenarios::build_acc_platoon(platoon)
                                       : scenarios::build_sacc(sacc);
}

RunConfig parse_config(std::istream& in, const RunConfig& base, const std::string& origin,
                       bool keep_case) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(origin + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }

  RunConfig cfg = base;
  if (auto run = keep_case ? boost::none : tree.get_child_optional("run")) {
    if (auto c = run->get_optional<std::string>("case")) {
      cfg.case_id = parse_int(*c, "run.case");
      cfg.platoon = scenarios::PlatoonParams::defaults(cfg.case_id);
    }
  }

  for (const auto& [section, body] : tree) {
    if (!body.data().empty()) throw ConfigError(origin + ": key '" + section + "' outside a section");
    for (const auto& [key, node] : body) {
      const std::string value = node.data();
      const std::string where = section + "." + key;
      bool known = false;
      if (section == "run") {
        known = true;
        if (key == "case") {
        } else if (key == "scenario") {
          cfg.scenario = parse_scenario(value);
        } else if (key == "feasibility") {
          cfg.sim.feasibility_enabled = parse_on_off(value);
        } else if (key == "policy") {
          cfg.sim.policy = sim::parse_policy(value);
        } else if (key == "dt") {
          cfg.sim.dt = parse_double(value, where);
        } else if (key == "t_end") {
          cfg.sim.t_end = parse_double(value, where);
        } else if (key == "abs_tol") {
          cfg.sim.integrator.abs_tol = parse_double(value, where);
        } else if (key == "rel_tol") {
          cfg.sim.integrator.rel_tol = parse_double(value, where);
        } else if (key == "min_step") {
          cfg.sim.integrator.min_step = parse_double(value, where);
        } else if (key == "max_steps") {
          cfg.sim.integrator.max_steps = parse_int(value, where);
        } else {
          known = false;
        }
      } else if (section == "platoon") {
        known = true;
        if (key == "gravity") cfg.platoon.gravity = parse_double(value, where);
        else if (key == "l_p") cfg.platoon.l_p = parse_double(value, where);
        else known = false;
      } else if (section == "vehicle1" || section == "vehicle2" || section == "vehicle3") {
        const int j = section.back() - '1';
        known = assign(cfg.platoon.vehicles[j], vehicle_fields(), key, value, section);
      } else if (section == "sacc") {
        known = assign(cfg.sacc, sacc_fields(), key, value, section);
      } else {
        throw ConfigError(origin + ": unknown section [" + section + "]");
      }
      if (!known) throw ConfigError(origin + ": unknown key '" + where + "'");
    }
  }
  return cfg;
}

RunConfig load_config(const std::string& path, const RunConfig& base, bool keep_case) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in, base, path, keep_case);
}

void write_config(std::ostream& out, const RunConfig& cfg) {
  out << "[run]\n"
      << "scenario = " << to_string(cfg.scenario) << "\n"
      << "case = " << cfg.case_id << "\n"
      << "feasibility = " << (cfg.sim.feasibility_enabled ? "on" : "off") << "\n"
      << "policy = " << sim::to_string(cfg.sim.policy) << "\n"
      << "dt = " << format_double(cfg.sim.dt) << "\n"
      << "t_end = " << format_double(cfg.sim.t_end) << "\n"
      << "abs_tol = " << format_double(cfg.sim.integrator.abs_tol) << "\n"
      << "rel_tol = " << format_double(cfg.sim.integrator.rel_tol) << "\n"
      << "min_step = " << format_double(cfg.sim.integrator.min_step) << "\n"
      << "max_steps = " << cfg.sim.integrator.max_steps << "\n\n";
  out << "[platoon]\n"
      << "gravity = " << format_double(cfg.platoon.gravity) << "\n"
      << "l_p = " << format_double(cfg.platoon.l_p) << "\n";
  for (int j = 0; j < 3; ++j) {
    out << "\n[vehicle" << j + 1 << "]\n";
    dump(out, cfg.platoon.vehicles[j], vehicle_fields());
  }
  out << "\n[sacc]\n";
  dump(out, cfg.sacc, sacc_fields());
}

}  // namespace cbfsafe::cli
