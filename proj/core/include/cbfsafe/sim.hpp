#pragma once

#include "cbfsafe/cbf_core.hpp"
#include "cbfsafe/integrator.hpp"
#include "cbfsafe/qp.hpp"

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cbfsafe::sim {

enum class InfeasibilityPolicy { Abort, DropControlBounds, ClampToBounds };

std::string_view to_string(InfeasibilityPolicy policy);
InfeasibilityPolicy parse_policy(std::string_view text);

struct SimConfig {
  double t_end = 30.0;
  double dt = 0.1;
  IntegratorOptions integrator{};
  InfeasibilityPolicy policy = InfeasibilityPolicy::Abort;
  bool feasibility_enabled = true;

  /// Throws ConfigError unless dt > 0, t_end >= 0 and t_end is a multiple of dt.
  void validate() const;
  int intervals() const;
  /// Grid time t_k; exact at k = intervals().
  double time_at(int k) const;
};

/// 0.5 z'Hz + c'z + constant over z = (u, delta).
struct QpCost {
  Matrix hessian;
  Vector linear;
  double constant = 0.0;
};

/// A QP-controlled member of a plant.
struct Agent {
  std::string name;
  SystemModel model;
  HocbfSpec hocbf;
  std::optional<ClfSpec> clf;
  FeasibilitySpec feasibility;
  ControlBounds bounds;
  std::function<QpCost(const Vector& local_state, const Signals&)> cost;
  std::function<Vector(const Vector& plant_state)> local_state;
  /// Signals for this agent given the plant state and the plant control vector
  /// (upstream agents' entries are already decided when this is called).
  std::function<Signals(double t, const Vector& plant_state, const Vector& plant_controls)> signals;
  int control_offset = 0;
};

/// Joint system: the QP-controlled agents plus any open-loop dynamics folded into `dynamics`.
struct Plant {
  int state_dim = 0;
  int control_dim = 0;
  Vector initial_state;
  std::function<Vector(double t, const Vector& x, const Vector& u)> dynamics;
  std::vector<Agent> agents;

  void validate() const;
};

struct AgentSample {
  bool evaluated = false;
  qp::QpStatus status = qp::QpStatus::Optimal;
  Vector u;
  double delta = 0.0;
  double a = 0.0;
  double a_dot = 0.0;
  std::vector<double> psi;
  double b_f = 0.0;
  Vector u_m;
  bool bounds_dropped = false;
  bool clamped = false;
  bool assumption1_ok = true;
  bool assumption1_zero = false;
  std::vector<ConstraintRow> rows;

  // Per-sample checks of the algebraic identities and guarantees.
  double identity_i1 = 0.0;
  double identity_i2 = 0.0;
  double identity_i3 = 0.0;
  double u_m_violation = 0.0;
  double applied_violation = 0.0;
  double kkt_residual = 0.0;
};

struct Sample {
  double t = 0.0;
  Vector state;
  Vector controls;
  std::vector<AgentSample> agents;
};

enum class Termination { Completed, InfeasibleAbort, SolverFailure, FeasibilityLoss, IntegrationFailure };

std::string_view to_string(Termination t);

struct SimTrace {
  std::vector<Sample> samples;
  Termination termination = Termination::Completed;
  std::string diagnostic;
  int intervals = 0;
};

/// Endpoint of the combined (plant state, auxiliary variables) ODE over [t0, t1]
/// with the controls held. Auxiliary variables follow the closed-form a' when the
/// feasibility constraint is enabled and stay constant otherwise.
std::pair<Vector, Vector> integrate_interval(const Plant& plant, const SimConfig& config, double t0,
                                             double t1, const Vector& state,
                                             const Vector& held_controls, const Vector& aux);

/// Checks the startup preconditions; throws ConfigError naming the violated inequality.
void check_initial_conditions(const Plant& plant, const SimConfig& config);

/// The discretised solve-hold-integrate loop.
SimTrace run(const Plant& plant, const SimConfig& config);

}  // namespace cbfsafe::sim
