#pragma once

#include "cbfsafe/scenarios.hpp"
#include "cbfsafe/sim.hpp"

#include <iosfwd>
#include <string>

namespace cbfsafe::cli {

enum class ScenarioKind { Acc, Sacc };

std::string_view to_string(ScenarioKind kind);
ScenarioKind parse_scenario(std::string_view text);

/// Everything a run depends on. Defaults are the ACC Case 1 values.
struct RunConfig {
  ScenarioKind scenario = ScenarioKind::Acc;
  int case_id = 1;
  sim::SimConfig sim{};
  scenarios::PlatoonParams platoon = scenarios::PlatoonParams::defaults(1);
  scenarios::SaccParams sacc{};

  static RunConfig defaults(int case_id);
  scenarios::Scenario build() const;
};

/// Reads an INI-style file over `base`. Unknown sections or keys are errors.
/// A `case` key in [run] resets the platoon to that case's defaults before the
/// remaining keys are applied, unless `keep_case` is set, in which case it is ignored.
RunConfig load_config(const std::string& path, const RunConfig& base, bool keep_case = false);
RunConfig parse_config(std::istream& in, const RunConfig& base, const std::string& origin,
                       bool keep_case = false);

/// Writes every key; reading the output back gives an identical RunConfig.
void write_config(std::ostream& out, const RunConfig& cfg);

bool parse_on_off(std::string_view text);
double parse_double(std::string_view text, std::string_view what);
std::string format_double(double v);

}  // namespace cbfsafe::cli
