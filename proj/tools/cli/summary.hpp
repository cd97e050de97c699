#pragma once

#include "trace_table.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <vector>

namespace cbfsafe::cli {

struct VehicleSummary {
  std::string label;
  std::optional<double> first_infeasible_time;
  std::vector<double> infeasible_times;
  std::optional<double> min_b;
  std::optional<double> first_b_negative_time;
  std::optional<double> min_u;
  std::optional<double> max_u;
  std::optional<double> min_b_f;
  std::optional<double> final_velocity;
  int non_optimal_samples = 0;

  bool operator==(const VehicleSummary&) const = default;
};

/// Per-vehicle feasibility and safety events; a pure function of the table.
struct RunSummary {
  int samples = 0;
  std::vector<VehicleSummary> vehicles;

  bool operator==(const RunSummary&) const = default;
};

RunSummary summarize(const TraceTable& table);

nlohmann::json to_json(const VehicleSummary& v);
nlohmann::json to_json(const RunSummary& s);

}  // namespace cbfsafe::cli
