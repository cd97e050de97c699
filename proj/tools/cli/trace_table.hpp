#pragma once

#include "cbfsafe/scenarios.hpp"
#include "cbfsafe/sim.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace cbfsafe::cli {

/// One vehicle's cells in a CSV row. Quantities a vehicle does not have
/// (the open-loop lead has no barrier) are NaN.
struct VehicleCells {
  double x = 0.0;
  double v = 0.0;
  double u = 0.0;
  double delta = 0.0;
  double a = 0.0;
  double b = 0.0;
  double b_f = 0.0;
  double psi1 = 0.0;
  std::string status;
};

struct TraceRow {
  double t = 0.0;
  std::vector<VehicleCells> vehicles;
  std::string flags;
};

struct VehicleColumn {
  std::string label;
  std::string position_name = "x";
};

/// The tabular form of a trace, exactly what the CSV holds.
struct TraceTable {
  std::vector<VehicleColumn> columns;
  std::vector<TraceRow> rows;

  bool operator==(const TraceTable&) const;
};

inline constexpr const char* kOpenLoop = "open-loop";
inline constexpr const char* kNotEvaluated = "not-evaluated";

TraceTable tabulate(const scenarios::Scenario& scenario, const sim::SimTrace& trace);

std::vector<std::string> csv_header(const std::vector<VehicleColumn>& columns);
void write_csv(std::ostream& out, const TraceTable& table);
/// Throws ConfigError on malformed input.
TraceTable read_csv(std::istream& in);

/// Returns false when the file cannot be written.
bool write_csv_file(const std::string& path, const TraceTable& table);
TraceTable read_csv_file(const std::string& path);

}  // namespace cbfsafe::cli
