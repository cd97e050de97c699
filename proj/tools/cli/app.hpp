#pragma once

#include "config.hpp"
#include "summary.hpp"
#include "trace_table.hpp"

#include <iosfwd>
#include <string>

namespace cbfsafe::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitIntegration = 3,
  kExitGuaranteeBreach = 4,
};

struct RunOutcome {
  RunConfig config;
  sim::SimTrace trace;
  TraceTable table;
  RunSummary summary;
};

/// Builds the scenario, runs it and tabulates the trace.
RunOutcome execute(const RunConfig& config);

/// A run with the feasibility constraint that ends in an unsafe sample or a
/// QP that is not optimal contradicts the guarantee.
bool guarantee_breached(const RunOutcome& outcome);

ExitCode exit_code(const RunOutcome& outcome);

/// Inserts `suffix` before the extension: ("out/trace.csv", "_on") -> "out/trace_on.csv".
std::string with_suffix(const std::string& path, const std::string& suffix);

/// Full command-line entry point.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cbfsafe::cli
