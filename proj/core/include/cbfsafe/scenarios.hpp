#pragma once

#include "cbfsafe/cbf_core.hpp"
#include "cbfsafe/sim.hpp"

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace cbfsafe::scenarios {

inline constexpr double kGravity = 9.81;

/// Longitudinal vehicle with resistance F_r(v) = f0 sgn(v) + f1 v + f2 v^2.
/// Controller fields are ignored for the open-loop lead vehicle.
struct VehicleParams {
  double mass = 1500.0;  // kg
  double f0 = 0.1;       // N
  double f1 = 5.0;       // N s/m
  double f2 = 0.25;      // N s^2/m
  double c_d = 0.4;      // deceleration bound -c_d M g
  double c_a = 0.4;      // acceleration bound  c_a M g
  double v_desired = 24.0;
  double k1 = 1.0;
  double k2 = 1.0;
  double l_f = 0.1;      // feasibility CBF gain
  double c3 = 1.0;
  double p = 1000.0;
  double epsilon = 1e-10;
  double a0 = 1.0;
  double x0 = 0.0;
  double v0 = 10.0;

  void validate(const std::string& name) const;
};

/// Throws DomainError for v <= 0.
double resistance_force(const VehicleParams& vp, double v);
double resistance_force_slope(const VehicleParams& vp, double v);

/// u_1 = 2 M_1 sin(2 pi t) + F_r(v_1).
double lead_control(const VehicleParams& lead, double t, double v1);
/// Acceleration 2 sin(2 pi t) implied by `lead_control`.
double lead_acceleration(double t);
double lead_jerk(double t);

struct PlatoonParams {
  double gravity = kGravity;
  double l_p = 10.0;
  std::array<VehicleParams, 3> vehicles{};

  /// Parameter set of the two bound cases (1: c_d = 0.4/0.35, l_F = 0.1;
  /// 2: c_d = 0.2/0.25, l_F = 0.05).
  static PlatoonParams defaults(int case_id);
  void validate() const;

  double lower_bound(int j) const;
  double upper_bound(int j) const;
};

/// Column mapping of one vehicle for trace output.
struct VehicleView {
  std::string label;
  int position_index = 0;
  int velocity_index = 1;
  int agent = -1;  // index into plant.agents, -1 for open loop
  std::string position_name = "x";
  std::function<double(double t, const Vector& state)> open_loop_input;
};

struct Scenario {
  std::string name;
  sim::Plant plant;
  std::vector<VehicleView> vehicles;
};

// --- ACC platoon -----------------------------------------------------------

/// Follower-local model. State (x_lead, v_lead, x, v); exogenous signals
/// (lead acceleration, lead jerk).
SystemModel follower_model(const VehicleParams& follower, double l_p);
HocbfSpec follower_hocbf(const VehicleParams& follower, double l_p);
ClfSpec follower_clf(const VehicleParams& follower);
ControlBounds follower_bounds(const VehicleParams& follower, double gravity);
sim::QpCost follower_cost(const VehicleParams& follower, double v);

/// Three-vehicle platoon: vehicle 1 open loop, vehicles 2 and 3 run the
/// CBF-CLF-QP, each treating its predecessor's kinematics as known signals.
Scenario build_acc_platoon(const PlatoonParams& params);

// --- SACC ------------------------------------------------------------------

/// Illustrative values for the two-vehicle example with constant lead speed.
struct SaccParams {
  double v_p = 13.89;
  double l_p = 10.0;
  double k1 = 0.1;
  double k2 = 0.1;
  double u_min = -1.178;
  double u_max = 1.178;
  double k_f = 0.1;
  double epsilon = 1e-10;
  double a0 = 0.0;
  double p = 1.0;
  double z0 = 100.0;
  double v0 = 20.0;

  void validate() const;
};

/// State (z, v), z the gap to the lead vehicle.
SystemModel sacc_model(const SaccParams& params);
HocbfSpec sacc_hocbf(const SaccParams& params);
Scenario build_sacc(const SaccParams& params);

}  // namespace cbfsafe::scenarios
