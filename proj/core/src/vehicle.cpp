#include "cbfsafe/errors.hpp"
#include "cbfsafe/scenarios.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace cbfsafe::scenarios {

void VehicleParams::validate(const std::string& name) const {
  auto need = [&](bool ok, const char* what) {
    if (!ok) throw ConfigError(name + ": " + what);
  };
  need(mass > 0.0, "mass must be positive");
  need(f0 > 0.0 && f1 > 0.0 && f2 > 0.0, "friction coefficients f0, f1, f2 must be positive");
  need(c_d > 0.0 && c_a > 0.0, "bound coefficients c_d, c_a must be positive");
  need(v_desired > 0.0, "desired speed must be positive");
  need(k1 > 0.0 && k2 > 0.0, "HOCBF gains must be positive");
  need(l_f > 0.0, "feasibility gain must be positive");
  need(c3 > 0.0 && p > 0.0, "CLF rate and relaxation weight must be positive");
  need(epsilon > 0.0, "epsilon must be positive");
  need(std::isfinite(a0) && std::isfinite(x0), "a0 and x0 must be finite");
  need(v0 > 0.0, "initial speed must be positive");
}

double resistance_force(const VehicleParams& vp, double v) {
  if (!(v > 0.0)) {
    std::ostringstream os;
    os << "resistance force needs v > 0, got v = " << v;
    throw DomainError(os.str());
  }
  return vp.f0 + vp.f1 * v + vp.f2 * v * v;
}

double resistance_force_slope(const VehicleParams& vp, double v) {
  if (!(v > 0.0)) throw DomainError("resistance force slope needs v > 0");
  return vp.f1 + 2.0 * vp.f2 * v;
}

double lead_acceleration(double t) { return 2.0 * std::sin(2.0 * std::numbers::pi * t); }

double lead_jerk(double t) {
  return 4.0 * std::numbers::pi * std::cos(2.0 * std::numbers::pi * t);
}

double lead_control(const VehicleParams& lead, double t, double v1) {
  return lead.mass * lead_acceleration(t) + resistance_force(lead, v1);
}

}  // namespace cbfsafe::scenarios
