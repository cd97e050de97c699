#include "summary.hpp"

#include "cbfsafe/qp.hpp"

#include <algorithm>
#include <cmath>

namespace cbfsafe::cli {

namespace {

void lower(std::optional<double>& acc, double v) {
  if (std::isfinite(v)) acc = acc ? std::min(*acc, v) : v;
}

void upper(std::optional<double>& acc, double v) {
  if (std::isfinite(v)) acc = acc ? std::max(*acc, v) : v;
}

nlohmann::json opt(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

RunSummary summarize(const TraceTable& table) {
  RunSummary s;
  s.samples = static_cast<int>(table.rows.size());
  const std::string optimal(qp::to_string(qp::QpStatus::Optimal));
  const std::string infeasible(qp::to_string(qp::QpStatus::Infeasible));

  for (std::size_t j = 0; j < table.columns.size(); ++j) {
    VehicleSummary v;
    v.label = table.columns[j].label;
    for (const TraceRow& r : table.rows) {
      const VehicleCells& c = r.vehicles[j];
      if (c.status == infeasible) {
        v.infeasible_times.push_back(r.t);
        if (!v.first_infeasible_time) v.first_infeasible_time = r.t;
      }
      if (c.status != optimal && c.status != kOpenLoop) ++v.non_optimal_samples;
      lower(v.min_b, c.b);
      if (c.b < 0.0 && !v.first_b_negative_time) v.first_b_negative_time = r.t;
      lower(v.min_u, c.u);
      upper(v.max_u, c.u);
      lower(v.min_b_f, c.b_f);
    }
    if (!table.rows.empty() && std::isfinite(table.rows.back().vehicles[j].v))
      v.final_velocity = table.rows.back().vehicles[j].v;
    s.vehicles.push_back(std::move(v));
  }
  return s;
}

nlohmann::json to_json(const VehicleSummary& v) {
  return {
      {"label", v.label},
      {"first_infeasible_time", opt(v.first_infeasible_time)},
      {"infeasible_times", v.infeasible_times},
      {"min_b", opt(v.min_b)},
      {"first_b_negative_time", opt(v.first_b_negative_time)},
      {"min_u", opt(v.min_u)},
      {"max_u", opt(v.max_u)},
      {"min_bF", opt(v.min_b_f)},
      {"final_velocity", opt(v.final_velocity)},
      {"non_optimal_samples", v.non_optimal_samples},
  };
}

nlohmann::json to_json(const RunSummary& s) {
  nlohmann::json vehicles = nlohmann::json::array();
  for (const auto& v : s.vehicles) vehicles.push_back(to_json(v));
  return {{"samples", s.samples}, {"vehicles", vehicles}};
}

}  // namespace cbfsafe::cli
