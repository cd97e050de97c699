#include "cbfsafe/sim.hpp"

#include "cbfsafe/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace cbfsafe::sim {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double rel(double diff, double scale) {
  return scale > 0.0 ? std::abs(diff) / scale : std::abs(diff);
}

Vector with_delta(const Vector& u, double delta) {
  Vector z(u.size() + 1);
  z.head(u.size()) = u;
  z(u.size()) = delta;
  return z;
}

qp::QpProblem assemble(const Agent& agent, const QpCost& cost, const std::vector<ConstraintRow>& rows,
                       bool with_box) {
  const int q = agent.model.control_dim();
  qp::QpProblem p = qp::QpProblem::make(cost.hessian, cost.linear);
  p.constant = cost.constant;
  p.rows = rows;
  if (with_box) {
    p.lower.head(q) = agent.bounds.lower();
    p.upper.head(q) = agent.bounds.upper();
  }
  return p;
}

struct Decision {
  AgentSample sample;
  bool stop = false;
  Termination reason = Termination::Completed;
  std::string diagnostic;
};

Decision decide(const Agent& agent, const SimConfig& cfg, const Vector& x, const Signals& sig,
                double a, const Vector& reference_signs) {
  const int q = agent.model.control_dim();
  Decision d;
  AgentSample& s = d.sample;
  s.evaluated = true;
  s.a = a;
  s.psi = psi_sequence(agent.hocbf, agent.model, x, sig);

  const ConstraintRow hocbf = hocbf_constraint_row(agent.hocbf, agent.model, x, sig);
  s.rows.push_back(hocbf);
  if (agent.clf) s.rows.push_back(clf_constraint_row(*agent.clf, agent.model, x, sig));

  const FeasibilityTerms terms = feasibility_terms(agent.hocbf, agent.model, agent.bounds, x, sig);
  s.b_f = terms.b_f;
  s.u_m = terms.u_m;

  const Vector z_m = with_delta(terms.u_m, 0.0);
  s.identity_i1 = rel(terms.b_f - hocbf.slack(z_m), std::abs(hocbf.lhs(z_m)) + std::abs(hocbf.bound));
  double worst_at_um = std::max(0.0, -hocbf.slack(z_m));
  if (!agent.bounds.contains(terms.u_m)) worst_at_um = std::numeric_limits<double>::infinity();

  if (cfg.feasibility_enabled) {
    const FeasibilitySpec& fs = agent.feasibility;
    try {
      s.a_dot = aux_dot(fs, terms, a, sig.t);
    } catch (const FeasibilityLoss& e) {
      d.stop = true;
      d.reason = Termination::FeasibilityLoss;
      d.diagnostic = agent.name + ": " + e.what();
      s.u = Vector::Constant(q, kNaN);
      s.delta = kNaN;
      return d;
    }
    const ConstraintRow feas = feasibility_constraint_row(fs, terms, a, s.a_dot);
    s.rows.push_back(feas);

    const double A = FeasibilitySpec::aux(a);
    const double lgu = terms.lg_b_f.dot(terms.u_m);
    s.identity_i2 = rel(A * (s.a_dot * terms.b_f + terms.lf_b_f + lgu),
                        A * (std::abs(s.a_dot * terms.b_f) + std::abs(terms.lf_b_f) + std::abs(lgu)));

    const ConstraintRow reduced = reduced_feasibility_row(fs, terms, a);
    double i3 = 0.0;
    for (Eigen::Index j = 0; j < feas.coeffs.size(); ++j)
      i3 = std::max(i3, rel(feas.coeffs(j) - reduced.coeffs(j),
                            std::max(std::abs(feas.coeffs(j)), std::abs(reduced.coeffs(j)))));
    const double bound_scale = fs.epsilon() + std::abs(A * s.a_dot * terms.b_f) +
                               std::abs(A * terms.lf_b_f) + std::abs(A * lgu) +
                               fs.gain() * A * std::abs(terms.b_f);
    s.identity_i3 = std::max(i3, rel(feas.bound - reduced.bound, bound_scale));
    worst_at_um = std::max(worst_at_um, -feas.slack(z_m));
  }
  s.u_m_violation = std::max(0.0, worst_at_um);

  const SignCheck sc = check_sign_pattern(
      agent.model.barrier_lie(x, sig).lg_lf, reference_signs);
  s.assumption1_ok = sc.holds;
  s.assumption1_zero = sc.has_zero;

  const QpCost cost = agent.cost(x, sig);
  const qp::ActiveSetSolver solver;
  const qp::QpProblem problem = assemble(agent, cost, s.rows, true);
  qp::QpSolution sol = solver.solve(problem);
  s.status = sol.status;

  if (sol.status == qp::QpStatus::Optimal) {
    s.u = sol.point.head(q);
    s.delta = sol.point(q);
    s.kkt_residual = sol.kkt_residual;
    s.applied_violation = qp::max_violation(problem, sol.point);
    return d;
  }

  if (sol.status == qp::QpStatus::Infeasible &&
      cfg.policy != InfeasibilityPolicy::Abort) {
    const qp::QpProblem relaxed = assemble(agent, cost, s.rows, false);
    const qp::QpSolution alt = solver.solve(relaxed);
    if (alt.status == qp::QpStatus::Optimal) {
      s.u = alt.point.head(q);
      s.delta = alt.point(q);
      if (cfg.policy == InfeasibilityPolicy::DropControlBounds) {
        s.bounds_dropped = true;
      } else {
        s.u = s.u.cwiseMax(agent.bounds.lower()).cwiseMin(agent.bounds.upper());
        s.clamped = true;
      }
      return d;
    }
    if (cfg.policy == InfeasibilityPolicy::ClampToBounds) {
      s.u = terms.u_m;
      s.delta = alt.status == qp::QpStatus::Optimal ? alt.point(q) : 0.0;
      s.clamped = true;
      return d;
    }
  }

  s.u = Vector::Constant(q, kNaN);
  s.delta = kNaN;
  d.stop = true;
  if (sol.status == qp::QpStatus::Infeasible) {
    d.reason = Termination::InfeasibleAbort;
    d.diagnostic = agent.name + ": QP infeasible at t = " + std::to_string(sig.t);
  } else {
    d.reason = Termination::SolverFailure;
    d.diagnostic = agent.name + ": QP solver hit its iteration cap at t = " + std::to_string(sig.t);
  }
  return d;
}

}  // namespace

std::string_view to_string(InfeasibilityPolicy policy) {
  switch (policy) {
    case InfeasibilityPolicy::Abort: return "abort";
    case InfeasibilityPolicy::DropControlBounds: return "drop-control-bounds";
    case InfeasibilityPolicy::ClampToBounds: return "clamp-to-bounds";
  }
  return "?";
}

InfeasibilityPolicy parse_policy(std::string_view text) {
  if (text == "abort") return InfeasibilityPolicy::Abort;
  if (text == "drop-control-bounds") return InfeasibilityPolicy::DropControlBounds;
  if (text == "clamp-to-bounds") return InfeasibilityPolicy::ClampToBounds;
  throw ConfigError("unknown infeasibility policy '" + std::string(text) + "'");
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::Completed: return "completed";
    case Termination::InfeasibleAbort: return "infeasible-abort";
    case Termination::SolverFailure: return "solver-failure";
    case Termination::FeasibilityLoss: return "feasibility-loss";
    case Termination::IntegrationFailure: return "integration-failure";
  }
  return "?";
}

void SimConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("control interval dt must be positive");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw ConfigError("t_end must be nonnegative");
  const double n = std::round(t_end / dt);
  if (std::abs(n * dt - t_end) > 1e-12 * std::max(1.0, t_end)) {
    std::ostringstream os;
    os << "t_end = " << t_end << " is not a multiple of dt = " << dt;
    throw ConfigError(os.str());
  }
}

int SimConfig::intervals() const { return static_cast<int>(std::round(t_end / dt)); }

double SimConfig::time_at(int k) const {
  const int n = intervals();
  return n == 0 ? 0.0 : t_end * static_cast<double>(k) / static_cast<double>(n);
}

void Plant::validate() const {
  if (state_dim <= 0) throw ConfigError("plant state dimension must be positive");
  if (initial_state.size() != state_dim) throw ConfigError("plant initial state has wrong size");
  if (!dynamics) throw ConfigError("plant needs dynamics");
  int used = 0;
  for (const Agent& a : agents) {
    if (!a.cost || !a.local_state || !a.signals) throw ConfigError(a.name + ": incomplete agent");
    if (a.bounds.size() != a.model.control_dim())
      throw ConfigError(a.name + ": bounds dimension differs from control dimension");
    if (a.control_offset < 0 || a.control_offset + a.model.control_dim() > control_dim)
      throw ConfigError(a.name + ": control slice out of range");
    used += a.model.control_dim();
  }
  if (used != control_dim) throw ConfigError("agent control slices do not cover the plant controls");
}

std::pair<Vector, Vector> integrate_interval(const Plant& plant, const SimConfig& config, double t0,
                                             double t1, const Vector& state,
                                             const Vector& held_controls, const Vector& aux) {
  const int n = plant.state_dim;
  const int na = static_cast<int>(aux.size());
  Vector y(n + na);
  y << state, aux;

  const OdeRhs rhs = [&](double t, const Vector& yy) {
    Vector dy = Vector::Zero(n + na);
    const Vector x = yy.head(n);
    dy.head(n) = plant.dynamics(t, x, held_controls);
    if (config.feasibility_enabled) {
      for (int i = 0; i < na; ++i) {
        const Agent& ag = plant.agents[i];
        const Signals sig = ag.signals(t, x, held_controls);
        const Vector xl = ag.local_state(x);
        const FeasibilityTerms terms = feasibility_terms(ag.hocbf, ag.model, ag.bounds, xl, sig);
        dy(n + i) = aux_dot(ag.feasibility, terms, yy(n + i), t);
      }
    }
    return dy;
  };
  const Vector out = integrate_dopri5(rhs, t0, t1, y, config.integrator);
  return {out.head(n), out.tail(na)};
}

void check_initial_conditions(const Plant& plant, const SimConfig& config) {
  const Vector zero_u = Vector::Zero(plant.control_dim);
  for (const Agent& ag : plant.agents) {
    const Signals sig = ag.signals(0.0, plant.initial_state, zero_u);
    const Vector x = ag.local_state(plant.initial_state);
    const std::vector<double> psi = psi_sequence(ag.hocbf, ag.model, x, sig);
    for (std::size_t i = 0; i < psi.size(); ++i) {
      if (!(psi[i] >= 0.0)) {
        std::ostringstream os;
        os << ag.name << ": initial state violates psi_" << i << "(x0) >= 0 (psi_" << i
           << " = " << psi[i] << ")";
        throw ConfigError(os.str());
      }
    }
    if (config.feasibility_enabled) {
      const double bf = feasibility_value(ag.hocbf, ag.model, ag.bounds, x, sig);
      if (!(bf > 0.0)) {
        std::ostringstream os;
        os << ag.name << ": initial state violates b_F(x0) > 0 (b_F = " << bf << ")";
        throw ConfigError(os.str());
      }
      const FeasibilitySpec& fs = ag.feasibility;
      const double margin = fs.gain() * FeasibilitySpec::aux(fs.a0()) * bf;
      if (!(margin >= fs.epsilon())) {
        std::ostringstream os;
        os << ag.name << ": initial state violates k_F e^a0 b_F(x0) >= epsilon (" << margin
           << " < " << fs.epsilon() << ")";
        throw ConfigError(os.str());
      }
    }
  }
}

SimTrace run(const Plant& plant, const SimConfig& config) {
  config.validate();
  plant.validate();
  check_initial_conditions(plant, config);

  const int n_agents = static_cast<int>(plant.agents.size());
  const int N = config.intervals();

  std::vector<Vector> reference_signs;
  {
    const Vector zero_u = Vector::Zero(plant.control_dim);
    for (const Agent& ag : plant.agents) {
      const Signals sig = ag.signals(0.0, plant.initial_state, zero_u);
      reference_signs.push_back(
          sign_pattern(ag.model.barrier_lie(ag.local_state(plant.initial_state), sig).lg_lf));
    }
  }

  SimTrace trace;
  trace.intervals = N;
  trace.samples.reserve(static_cast<std::size_t>(N) + 1);

  Vector x = plant.initial_state;
  Vector aux(n_agents);
  for (int i = 0; i < n_agents; ++i) aux(i) = plant.agents[i].feasibility.a0();

  for (int k = 0; k <= N; ++k) {
    const double t = config.time_at(k);
    Sample sample;
    sample.t = t;
    sample.state = x;
    sample.controls = Vector::Zero(plant.control_dim);
    sample.agents.resize(n_agents);

    bool stop = false;
    for (int i = 0; i < n_agents && !stop; ++i) {
      const Agent& ag = plant.agents[i];
      const Signals sig = ag.signals(t, x, sample.controls);
      Decision d;
      try {
        d = decide(ag, config, ag.local_state(x), sig, aux(i), reference_signs[i]);
      } catch (const DomainError& e) {
        d.sample.evaluated = true;
        d.sample.u = Vector::Constant(ag.model.control_dim(), kNaN);
        d.sample.delta = kNaN;
        d.stop = true;
        d.reason = Termination::IntegrationFailure;
        d.diagnostic = ag.name + ": " + e.what();
      }
      sample.controls.segment(ag.control_offset, ag.model.control_dim()) = d.sample.u;
      sample.agents[i] = std::move(d.sample);
      if (d.stop) {
        stop = true;
        trace.termination = d.reason;
        trace.diagnostic = d.diagnostic;
      }
    }
    trace.samples.push_back(std::move(sample));
    if (stop || k == N) break;

    try {
      auto [x_next, aux_next] = integrate_interval(plant, config, t, config.time_at(k + 1), x,
                                                   trace.samples.back().controls, aux);
      x = std::move(x_next);
      aux = std::move(aux_next);
    } catch (const FeasibilityLoss& e) {
      trace.termination = Termination::FeasibilityLoss;
      trace.diagnostic = e.what();
      break;
    } catch (const IntegrationFailure& e) {
      trace.termination = Termination::IntegrationFailure;
      trace.diagnostic = e.what();
      break;
    } catch (const DomainError& e) {
      trace.termination = Termination::IntegrationFailure;
      trace.diagnostic = e.what();
      break;
    }
    if (!x.allFinite() || !aux.allFinite()) {
      trace.termination = Termination::IntegrationFailure;
      trace.diagnostic = "non-finite state after integrating from t = " + std::to_string(t);
      break;
    }
  }
  return trace;
}

}  // namespace cbfsafe::sim
