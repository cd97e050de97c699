// One PASS/FAIL line per acceptance criterion. `--only N` restricts the run to
// criterion N; the exit status is non-zero when any selected criterion fails.

#include "app.hpp"
#include "trace_table.hpp"

#include "lie_check.hpp"
#include "qp_oracle.hpp"
#include "random_qp.hpp"

#include "cbfsafe/integrator.hpp"
#include "cbfsafe/scenarios.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace cbfsafe;
using cbfsafe::cli::RunConfig;
using cbfsafe::cli::RunOutcome;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

constexpr double kCase1InfeasibleTime = 16.7;
constexpr double kCase2UnsafeTime = 18.7;
constexpr double kTimingTol = 1.0;
constexpr double kBoxTol = 1e-9;
constexpr double kIdentityTol = 1e-12;
constexpr double kOracleObjectiveTol = 1e-6;
constexpr double kFdTol = 1e-5;
constexpr double kInvarianceFloor = -1e-6;
constexpr double kExpStepTol = 1e-7;
constexpr double kLeadSpeedTol = 1e-5;

struct Verdict {
  bool pass = true;
  std::string detail;
};

class Report {
 public:
  void require(bool ok, const std::string& what) {
    if (!ok) pass_ = false;
    add(std::string(ok ? "" : "FAILED ") + what);
  }
  void note(const std::string& what) { add(what); }
  Verdict verdict() const { return {pass_, text_.str()}; }

 private:
  void add(const std::string& s) {
    if (!first_) text_ << "; ";
    first_ = false;
    text_ << s;
  }
  bool pass_ = true;
  bool first_ = true;
  std::ostringstream text_;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : std::string("none"); }

// --- shared runs -------------------------------------------------------------

RunConfig acc_config(int case_id, bool feasibility) {
  RunConfig c = RunConfig::defaults(case_id);
  c.scenario = cli::ScenarioKind::Acc;
  c.sim.feasibility_enabled = feasibility;
  if (!feasibility) {
    c.sim.policy = case_id == 1 ? sim::InfeasibilityPolicy::DropControlBounds
                                : sim::InfeasibilityPolicy::ClampToBounds;
  }
  return c;
}

RunConfig sacc_generous_config() {
  RunConfig c = RunConfig::defaults(1);
  c.scenario = cli::ScenarioKind::Sacc;
  c.sacc.u_min = -100.0;
  c.sacc.u_max = 100.0;
  return c;
}

const RunOutcome& acc_run(int case_id, bool feasibility) {
  static std::map<std::pair<int, bool>, RunOutcome> cache;
  const auto key = std::make_pair(case_id, feasibility);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, cli::execute(acc_config(case_id, feasibility))).first;
  return it->second;
}

const RunOutcome& sacc_run() {
  static const RunOutcome run = cli::execute(sacc_generous_config());
  return run;
}

// Earliest of the per-follower times.
std::optional<double> earliest(const RunOutcome& o, std::optional<double> cli::VehicleSummary::*field) {
  std::optional<double> best;
  for (const auto& v : o.summary.vehicles)
    if (v.*field && (!best || *(v.*field) < *best)) best = v.*field;
  return best;
}

double min_barrier(const RunOutcome& o) {
  double m = kInf;
  for (const auto& v : o.summary.vehicles)
    if (v.min_b) m = std::min(m, *v.min_b);
  return m;
}

int non_optimal(const RunOutcome& o) {
  int n = 0;
  for (const auto& s : o.trace.samples)
    for (const auto& a : s.agents)
      if (!a.evaluated || a.status != qp::QpStatus::Optimal) ++n;
  return n;
}

// Largest distance of an applied follower control outside its box.
double box_excess(const RunOutcome& o) {
  const auto& agents = o.config.platoon;
  double worst = 0.0;
  for (const auto& s : o.trace.samples) {
    for (std::size_t k = 0; k < s.agents.size(); ++k) {
      const auto& a = s.agents[k];
      if (!a.evaluated) continue;
      const int j = static_cast<int>(k) + 1;
      const double u = a.u(0);
      if (!std::isfinite(u)) return kInf;
      worst = std::max({worst, agents.lower_bound(j) - u, u - agents.upper_bound(j)});
    }
  }
  return worst;
}

bool completed(const RunOutcome& o) { return o.trace.termination == sim::Termination::Completed; }

Vector with_delta(const Vector& u) {
  Vector z = Vector::Zero(u.size() + 1);
  z.head(u.size()) = u;
  return z;
}

// --- criteria ----------------------------------------------------------------

Verdict case1_rescue() {
  Report r;
  const RunOutcome& on = acc_run(1, true);
  r.require(completed(on), "ON completed");
  const int bad = non_optimal(on);
  r.require(bad == 0, "ON non-optimal QPs " + std::to_string(bad) + " of " +
                          std::to_string(2 * on.trace.samples.size()));
  const double excess = box_excess(on);
  r.require(excess <= kBoxTol, "ON box excess " + fmt(excess) + " N");
  const double mb = min_barrier(on);
  r.require(mb >= 0.0, "ON min b " + fmt(mb));

  const RunOutcome& off = acc_run(1, false);
  r.require(completed(off), "OFF completed");
  const auto first = earliest(off, &cli::VehicleSummary::first_infeasible_time);
  r.require(first && std::abs(*first - kCase1InfeasibleTime) <= kTimingTol,
            "OFF first infeasible t " + fmt_opt(first) + " s (expected " + fmt(kCase1InfeasibleTime) +
                " +- " + fmt(kTimingTol) + ")");
  for (const auto& v : off.summary.vehicles)
    if (v.first_infeasible_time) r.note("vehicle " + v.label + " first infeasible " + fmt_opt(v.first_infeasible_time));
  const double mb_off = min_barrier(off);
  r.require(mb_off >= 0.0, "OFF min b " + fmt(mb_off));
  return r.verdict();
}

Verdict case2_rescue() {
  Report r;
  const RunOutcome& on = acc_run(2, true);
  r.require(completed(on), "ON completed");
  const int bad = non_optimal(on);
  r.require(bad == 0, "ON non-optimal QPs " + std::to_string(bad));
  const double mb = min_barrier(on);
  r.require(mb > 0.0, "ON min b " + fmt(mb));

  const RunOutcome& off = acc_run(2, false);
  r.require(completed(off), "OFF completed");
  const auto first = earliest(off, &cli::VehicleSummary::first_b_negative_time);
  r.require(first && std::abs(*first - kCase2UnsafeTime) <= kTimingTol,
            "OFF first b<0 t " + fmt_opt(first) + " s (expected " + fmt(kCase2UnsafeTime) + " +- " +
                fmt(kTimingTol) + ")");
  for (const auto& v : off.summary.vehicles)
    if (v.first_b_negative_time) r.note("vehicle " + v.label + " first b<0 " + fmt_opt(v.first_b_negative_time));
  const double excess = box_excess(off);
  r.require(excess <= kBoxTol, "OFF box excess " + fmt(excess) + " N");
  return r.verdict();
}

Verdict u_m_compatibility() {
  Report r;
  for (int case_id : {1, 2}) {
    const RunOutcome& on = acc_run(case_id, true);
    int checked = 0, violations = 0;
    for (const auto& s : on.trace.samples) {
      for (std::size_t k = 0; k < s.agents.size(); ++k) {
        const auto& a = s.agents[k];
        if (!a.evaluated) continue;
        ++checked;
        const Vector z = with_delta(a.u_m);
        bool ok = on.config.platoon.lower_bound(static_cast<int>(k) + 1) <= a.u_m(0) &&
                  a.u_m(0) <= on.config.platoon.upper_bound(static_cast<int>(k) + 1);
        bool saw_feasibility = false;
        for (const ConstraintRow& row : a.rows) {
          if (row.label == RowLabel::Clf) continue;
          saw_feasibility |= row.label == RowLabel::Feasibility;
          ok &= row.slack(z) >= 0.0;
        }
        ok &= saw_feasibility;
        if (!ok) ++violations;
      }
    }
    r.require(checked > 0 && violations == 0, "case " + std::to_string(case_id) + ": " +
                                                  std::to_string(violations) + " violations in " +
                                                  std::to_string(checked) + " samples");
  }
  return r.verdict();
}

struct IdentityWorst {
  double i1 = 0.0, i2 = 0.0, i3 = 0.0;
  int samples = 0;
};

// Recomputes the identities from the agent definitions at each recorded sample.
void accumulate_identities(const RunOutcome& o, IdentityWorst& w) {
  const auto sc = o.config.build();
  const auto& agents = sc.plant.agents;
  const bool feas = o.config.sim.feasibility_enabled;
  for (const auto& s : o.trace.samples) {
    for (std::size_t k = 0; k < agents.size(); ++k) {
      const auto& rec = s.agents[k];
      if (!rec.evaluated) continue;
      const sim::Agent& ag = agents[k];
      const Vector x = ag.local_state(s.state);
      const Signals sig = ag.signals(s.t, s.state, s.controls);
      ++w.samples;

      const double b_f = feasibility_value(ag.hocbf, ag.model, ag.bounds, x, sig);
      const ConstraintRow h = hocbf_constraint_row(ag.hocbf, ag.model, x, sig);
      const Vector z = with_delta(compute_u_m(h.coeffs.head(ag.model.control_dim()), ag.bounds));
      const double lhs = h.lhs(z) - h.bound;
      w.i1 = std::max(w.i1, std::abs(b_f - lhs) / std::max(std::abs(h.lhs(z)) + std::abs(h.bound), 1e-300));
      if (!feas) continue;

      const FeasibilityTerms t = feasibility_terms(ag.hocbf, ag.model, ag.bounds, x, sig);
      const double A = std::exp(rec.a);
      const double a_dot = aux_dot(ag.feasibility, t, rec.a, s.t);
      const double lgu = t.lg_b_f.dot(t.u_m);
      const double sum = a_dot * t.b_f + t.lf_b_f + lgu;
      const double scale = std::abs(a_dot * t.b_f) + std::abs(t.lf_b_f) + std::abs(lgu);
      w.i2 = std::max(w.i2, std::abs(A * sum) / std::max(A * scale, 1e-300));

      const ConstraintRow full = feasibility_constraint_row(ag.feasibility, t, rec.a, a_dot);
      // Reduced row written out directly.
      const double k_f = ag.feasibility.gain(), eps = ag.feasibility.epsilon();
      Vector coeffs = Vector::Zero(full.coeffs.size());
      coeffs.head(t.lg_b_f.size()) = A * t.lg_b_f;
      const double bound = eps - k_f * A * t.b_f + A * lgu;
      double i3 = 0.0;
      for (Eigen::Index j = 0; j < coeffs.size(); ++j) {
        const double sc_j = std::max(std::abs(coeffs(j)), std::abs(full.coeffs(j)));
        if (sc_j > 0.0) i3 = std::max(i3, std::abs(coeffs(j) - full.coeffs(j)) / sc_j);
      }
      const double bound_scale =
          eps + A * (std::abs(a_dot * t.b_f) + std::abs(t.lf_b_f) + std::abs(lgu) + k_f * std::abs(t.b_f));
      i3 = std::max(i3, std::abs(bound - full.bound) / bound_scale);
      if (full.sense != Sense::GreaterEqual || full.label != RowLabel::Feasibility) i3 = kInf;
      w.i3 = std::max(w.i3, i3);
    }
  }
}

Verdict identities() {
  Report r;
  IdentityWorst w;
  for (int case_id : {1, 2})
    for (bool feas : {true, false}) accumulate_identities(acc_run(case_id, feas), w);
  accumulate_identities(sacc_run(), w);
  r.require(w.i1 <= kIdentityTol, "I1 " + fmt(w.i1));
  r.require(w.i2 <= kIdentityTol, "I2 " + fmt(w.i2));
  r.require(w.i3 <= kIdentityTol, "I3 " + fmt(w.i3));
  r.note(std::to_string(w.samples) + " agent samples over 5 runs");
  return r.verdict();
}

Verdict qp_oracle() {
  Report r;
  std::mt19937_64 rng(20240521);
  int verdict_mismatch = 0, infeasible = 0;
  double worst_obj = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const qp::QpProblem p = testing::random_qp(rng);
    const qp::QpSolution s = qp::solve(p);
    const auto o = testing::enumerate_qp(p);
    const bool solver_feasible = s.status == qp::QpStatus::Optimal;
    if (solver_feasible != o.feasible || (s.status != qp::QpStatus::Optimal && s.status != qp::QpStatus::Infeasible)) {
      ++verdict_mismatch;
      continue;
    }
    if (!o.feasible) {
      ++infeasible;
      continue;
    }
    worst_obj = std::max(worst_obj, std::abs(s.objective - o.objective) / std::max(1.0, std::abs(o.objective)));
  }
  r.require(verdict_mismatch == 0, std::to_string(verdict_mismatch) + " verdict mismatches in 1000");
  r.require(worst_obj <= kOracleObjectiveTol, "worst objective error " + fmt(worst_obj));
  r.note(std::to_string(infeasible) + " infeasible");
  return r.verdict();
}

Verdict lie_gradients() {
  Report r;
  for (const auto& sw : testing::lie_sweep(7, 100)) {
    r.require(sw.states == 100 && sw.worst.relative < kFdTol,
              std::string(sw.name) + " worst " + fmt(sw.worst.relative) + " over " + std::to_string(sw.states));
  }
  return r.verdict();
}

Verdict forward_invariance() {
  Report r;
  auto check = [&r](const RunOutcome& o, const std::string& name) {
    double worst = kInf;
    for (const auto& s : o.trace.samples)
      for (const auto& a : s.agents)
        for (double psi : a.psi) worst = std::min(worst, psi);
    r.require(completed(o) && worst >= kInvarianceFloor, name + " min psi " + fmt(worst));
  };
  check(sacc_run(), "sacc");
  check(acc_run(1, true), "acc case 1");
  check(acc_run(2, true), "acc case 2");
  return r.verdict();
}

Verdict integrator_accuracy() {
  Report r;
  const OdeRhs decay = [](double, const Vector& y) -> Vector { return -y; };
  const Vector y = integrate_dopri5(decay, 0.0, 0.1, Vector::Constant(1, 1.0));
  const double exact = std::exp(-0.1);
  const double e = std::abs(y(0) - exact) / exact;
  r.require(e <= kExpStepTol, "exp(-0.1) relative error " + fmt(e));

  const RunOutcome& o = acc_run(1, true);
  const double v0 = o.config.platoon.vehicles[0].v0;
  double worst = 0.0;
  for (const auto& s : o.trace.samples) {
    const double v = v0 + (1.0 - std::cos(2.0 * std::numbers::pi * s.t)) / std::numbers::pi;
    worst = std::max(worst, std::abs(s.state(1) - v));
  }
  r.require(o.trace.samples.size() == 301 && worst <= kLeadSpeedTol,
            "lead speed worst error " + fmt(worst) + " m/s over " + std::to_string(o.trace.samples.size()) +
                " samples");
  return r.verdict();
}

Verdict determinism() {
  Report r;
  std::vector<std::pair<std::string, RunConfig>> configs = {
      {"acc case 1 on", acc_config(1, true)},
      {"acc case 1 off", acc_config(1, false)},
      {"acc case 2 off", acc_config(2, false)},
      {"sacc", sacc_generous_config()}};
  for (const auto& [name, cfg] : configs) {
    std::string first;
    bool same = true;
    for (int rep = 0; rep < 3; ++rep) {
      std::ostringstream os;
      cli::write_csv(os, cli::execute(cfg).table);
      if (rep == 0) first = os.str();
      else same &= os.str() == first;
    }
    r.require(same && !first.empty(), name + (same ? " identical" : " differs"));
  }
  return r.verdict();
}

struct Criterion {
  int id;
  const char* title;
  std::function<Verdict()> check;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  int only = 0;
  app.add_option("--only", only, "run a single criterion")->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria = {
      {1, "case 1 rescue", case1_rescue},
      {2, "case 2 rescue", case2_rescue},
      {3, "u_M satisfies every hard row", u_m_compatibility},
      {4, "identities I1-I3", identities},
      {5, "QP solver vs enumeration oracle", qp_oracle},
      {6, "Lie derivatives vs finite differences", lie_gradients},
      {7, "forward invariance at samples", forward_invariance},
      {8, "integrator accuracy", integrator_accuracy},
      {9, "deterministic CSV", determinism},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    Verdict v;
    try {
      v = c.check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failed;
    std::printf("%s %d %s: %s\n", v.pass ? "PASS" : "FAIL", c.id, c.title, v.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
