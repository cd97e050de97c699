#include "app.hpp"

#include "cbfsafe/errors.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <future>
#include <optional>
#include <ostream>
#include <sstream>
#include <vector>

namespace cbfsafe::cli {

namespace {

struct Flags {
  std::string config_path;
  std::optional<std::string> scenario;
  std::optional<int> case_id;
  std::optional<std::string> feasibility;
  std::optional<std::string> policy;
  std::optional<double> dt;
  std::optional<double> t_end;
  std::string out;
  std::string summary = "summary.json";
  bool compare = false;
};

void add_run_options(CLI::App& cmd, Flags& f) {
  cmd.add_option("--config", f.config_path, "INI file with parameter overrides")
      ->check(CLI::ExistingFile);
  cmd.add_option("--scenario", f.scenario, "sacc or acc");
  cmd.add_option("--case", f.case_id, "ACC parameter set, 1 or 2");
  cmd.add_option("--feasibility", f.feasibility, "feasibility constraint on or off");
  cmd.add_option("--policy", f.policy, "abort, drop-control-bounds or clamp-to-bounds");
  cmd.add_option("--dt", f.dt, "control interval [s]");
  cmd.add_option("--t-end", f.t_end, "horizon [s]");
}

RunConfig effective_config(const Flags& f) {
  RunConfig cfg = RunConfig::defaults(f.case_id.value_or(1));
  if (!f.config_path.empty()) cfg = load_config(f.config_path, cfg, f.case_id.has_value());
  if (f.scenario) cfg.scenario = parse_scenario(*f.scenario);
  if (f.feasibility) cfg.sim.feasibility_enabled = parse_on_off(*f.feasibility);
  if (f.policy) cfg.sim.policy = sim::parse_policy(*f.policy);
  if (f.dt) cfg.sim.dt = *f.dt;
  if (f.t_end) cfg.sim.t_end = *f.t_end;
  cfg.sim.validate();
  if (cfg.scenario == ScenarioKind::Acc) cfg.platoon.validate();
  else cfg.sacc.validate();
  return cfg;
}

nlohmann::json report(const RunOutcome& o, const std::string& csv) {
  const RunConfig& c = o.config;
  return {
      {"scenario", std::string(to_string(c.scenario))},
      {"case", c.case_id},
      {"feasibility", c.sim.feasibility_enabled ? "on" : "off"},
      {"policy", std::string(sim::to_string(c.sim.policy))},
      {"dt", c.sim.dt},
      {"t_end", c.sim.t_end},
      {"termination", std::string(sim::to_string(o.trace.termination))},
      {"diagnostic", o.trace.diagnostic},
      {"guarantee_breach", guarantee_breached(o)},
      {"csv", csv},
      {"summary", to_json(o.summary)},
  };
}

int run_command(const Flags& f, std::ostream& out, std::ostream& err) {
  RunConfig cfg = effective_config(f);
  const std::string out_path = f.out.empty() ? "trace.csv" : f.out;

  std::vector<std::pair<RunConfig, std::string>> jobs;
  if (f.compare) {
    RunConfig on = cfg, off = cfg;
    on.sim.feasibility_enabled = true;
    off.sim.feasibility_enabled = false;
    jobs.emplace_back(on, with_suffix(out_path, "_on"));
    jobs.emplace_back(off, with_suffix(out_path, "_off"));
  } else {
    jobs.emplace_back(cfg, out_path);
  }

  std::vector<std::future<RunOutcome>> pending;
  for (const auto& job : jobs)
    pending.push_back(std::async(std::launch::async, execute, job.first));

  std::vector<RunOutcome> outcomes;
  for (auto& p : pending) outcomes.push_back(p.get());

  int code = kExitOk;
  nlohmann::json runs = nlohmann::json::array();
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const RunOutcome& o = outcomes[i];
    if (!write_csv_file(jobs[i].second, o.table)) {
      err << "error: cannot write '" << jobs[i].second << "'\n";
      return kExitIntegration;
    }
    runs.push_back(report(o, jobs[i].second));
    const ExitCode c = exit_code(o);
    if (c != kExitOk) {
      err << jobs[i].second << ": " << sim::to_string(o.trace.termination)
          << (o.trace.diagnostic.empty() ? "" : ": " + o.trace.diagnostic)
          << (c == kExitGuaranteeBreach ? " (guarantee breach)" : "") << "\n";
    }
    code = std::max(code, static_cast<int>(c));
  }

  std::ofstream sf(f.summary, std::ios::trunc);
  if (!sf) {
    err << "error: cannot write '" << f.summary << "'\n";
    return kExitIntegration;
  }
  sf << nlohmann::json{{"runs", runs}}.dump(2) << "\n";
  if (!sf.flush()) {
    err << "error: cannot write '" << f.summary << "'\n";
    return kExitIntegration;
  }
  for (std::size_t i = 0; i < jobs.size(); ++i)
    out << jobs[i].second << ": " << sim::to_string(outcomes[i].trace.termination) << ", "
        << outcomes[i].table.rows.size() << " samples\n";
  return code;
}

int config_command(const Flags& f, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = effective_config(f);
  if (f.out.empty()) {
    write_config(out, cfg);
    return kExitOk;
  }
  std::ofstream file(f.out, std::ios::trunc);
  if (file) write_config(file, cfg);
  if (!file || !file.flush()) {
    err << "error: cannot write '" << f.out << "'\n";
    return kExitIntegration;
  }
  return kExitOk;
}

}  // namespace

RunOutcome execute(const RunConfig& config) {
  RunOutcome o;
  o.config = config;
  const scenarios::Scenario sc = config.build();
  o.trace = sim::run(sc.plant, config.sim);
  o.table = tabulate(sc, o.trace);
  o.summary = summarize(o.table);
  return o;
}

bool guarantee_breached(const RunOutcome& o) {
  if (!o.config.sim.feasibility_enabled) return false;
  if (o.trace.termination == sim::Termination::InfeasibleAbort ||
      o.trace.termination == sim::Termination::SolverFailure)
    return true;
  for (const VehicleSummary& v : o.summary.vehicles) {
    if (v.non_optimal_samples > 0) return true;
    if (v.first_b_negative_time) return true;
  }
  return false;
}

ExitCode exit_code(const RunOutcome& o) {
  if (o.trace.termination == sim::Termination::IntegrationFailure ||
      o.trace.termination == sim::Termination::FeasibilityLoss)
    return kExitIntegration;
  if (guarantee_breached(o)) return kExitGuaranteeBreach;
  return kExitOk;
}

std::string with_suffix(const std::string& path, const std::string& suffix) {
  const std::filesystem::path p(path);
  std::filesystem::path r = p.parent_path() / (p.stem().string() + suffix + p.extension().string());
  return r.string();
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulate CBF-CLF-QP controllers with and without the feasibility constraint",
               "cbfsafe"};
  app.require_subcommand(1);
  Flags flags;

  CLI::App* run = app.add_subcommand("run", "run a scenario and write CSV trace(s) and a summary");
  add_run_options(*run, flags);
  run->add_option("--out", flags.out, "CSV trace path (default trace.csv)");
  run->add_option("--summary", flags.summary, "JSON summary path");
  run->add_flag("--compare", flags.compare, "run with and without the feasibility constraint");

  CLI::App* config = app.add_subcommand("config", "print the effective configuration");
  add_run_options(*config, flags);
  config->add_option("--out", flags.out, "write to this file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitConfig;
  }

  try {
    if (run->parsed()) return run_command(flags, out, err);
    return config_command(flags, out, err);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DomainError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace cbfsafe::cli
