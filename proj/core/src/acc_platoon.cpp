#include "cbfsafe/errors.hpp"
#include "cbfsafe/scenarios.hpp"

#include <sstream>

namespace cbfsafe::scenarios {

namespace {

// Follower-local state layout.
constexpr int kLeadX = 0, kLeadV = 1, kX = 2, kV = 3;
// Exogenous signal layout.
constexpr int kLeadAccel = 0, kLeadJerk = 1;

double exo(const Signals& s, int i) { return s.exogenous.size() > i ? s.exogenous(i) : 0.0; }

}  // namespace

PlatoonParams PlatoonParams::defaults(int case_id) {
  if (case_id != 1 && case_id != 2) throw ConfigError("ACC case must be 1 or 2");
  PlatoonParams p;
  VehicleParams& v1 = p.vehicles[0];
  v1.mass = 1500.0;
  v1.x0 = 0.0;
  v1.v0 = 13.89;
  v1.v_desired = 13.89;

  VehicleParams& v2 = p.vehicles[1];
  v2.mass = 1650.0;
  v2.x0 = -100.0;
  v2.v0 = 8.0;
  v2.v_desired = 24.0;
  v2.c_a = 0.4;

  VehicleParams& v3 = p.vehicles[2];
  v3.mass = 1550.0;
  v3.x0 = -190.0;
  v3.v0 = 14.0;
  v3.v_desired = 25.0;
  v3.c_a = 0.35;

  for (VehicleParams* v : {&v2, &v3}) {
    v->k1 = 1.0;
    v->k2 = 1.0;
    v->c3 = 1.0;
    v->p = 1000.0;
    v->epsilon = 1e-10;
    v->a0 = 1.0;
  }
  if (case_id == 1) {
    v2.c_d = 0.4;
    v3.c_d = 0.35;
    v2.l_f = v3.l_f = 0.1;
  } else {
    v2.c_d = 0.2;
    v3.c_d = 0.25;
    v2.l_f = v3.l_f = 0.05;
  }
  return p;
}

void PlatoonParams::validate() const {
  if (!(gravity > 0.0)) throw ConfigError("gravity must be positive");
  if (!(l_p > 0.0)) throw ConfigError("safe distance l_p must be positive");
  for (int j = 0; j < 3; ++j) vehicles[j].validate("vehicle " + std::to_string(j + 1));
  if (!(vehicles[0].x0 > vehicles[1].x0 && vehicles[1].x0 > vehicles[2].x0)) {
    std::ostringstream os;
    os << "initial positions must satisfy x1 > x2 > x3 (got " << vehicles[0].x0 << ", "
       << vehicles[1].x0 << ", " << vehicles[2].x0 << ")";
    throw ConfigError(os.str());
  }
}

double PlatoonParams::lower_bound(int j) const {
  const VehicleParams& v = vehicles[j];
  return -v.c_d * v.mass * gravity;
}

double PlatoonParams::upper_bound(int j) const {
  const VehicleParams& v = vehicles[j];
  return v.c_a * v.mass * gravity;
}

SystemModel follower_model(const VehicleParams& vp, double l_p) {
  (void)l_p;
  auto drift = [vp](const Vector& x, const Signals& s) {
    Vector f(4);
    f << x(kLeadV), exo(s, kLeadAccel), x(kV), -resistance_force(vp, x(kV)) / vp.mass;
    return f;
  };
  auto actuation = [vp](const Vector&, const Signals&) {
    Matrix g = Matrix::Zero(4, 1);
    g(kV, 0) = 1.0 / vp.mass;
    return g;
  };

  LieBundle lie;
  lie.barrier = [vp](const Vector& x, const Signals& s) {
    const double M = vp.mass;
    const double v = x(kV);
    const double fr = resistance_force(vp, v);
    const double dfr = resistance_force_slope(vp, v);
    BarrierLie l;
    l.lf = {x(kLeadV) - v,                                  // L_f b
            exo(s, kLeadAccel) + fr / M,                    // L_f^2 b
            exo(s, kLeadJerk) + (dfr / M) * (-fr / M)};     // L_f^3 b
    l.lg_lf = Vector::Constant(1, -1.0 / M);
    l.lg_lf_next = Vector::Constant(1, dfr / (M * M));
    l.lf_of_lg_lf = Vector::Zero(1);
    l.lg_of_lg_lf = Matrix::Zero(1, 1);
    return l;
  };
  lie.lyapunov = [vp](const Vector& x, const Signals&) {
    const double M = vp.mass;
    const double e = x(kV) - vp.v_desired;
    LyapunovLie l;
    l.lf_v = 2.0 * e * (-resistance_force(vp, x(kV)) / M);
    l.lg_v = Vector::Constant(1, 2.0 * e / M);
    return l;
  };
  return SystemModel(4, 1, drift, actuation, lie);
}

HocbfSpec follower_hocbf(const VehicleParams& vp, double l_p) {
  return HocbfSpec(2, {vp.k1, vp.k2},
                   [l_p](const Vector& x, const Signals&) { return x(kLeadX) - x(kX) - l_p; });
}

ClfSpec follower_clf(const VehicleParams& vp) {
  const double vd = vp.v_desired;
  return ClfSpec(
      [vd](const Vector& x, const Signals&) {
        const double e = x(kV) - vd;
        return e * e;
      },
      vp.c3, vp.p);
}

ControlBounds follower_bounds(const VehicleParams& vp, double gravity) {
  return ControlBounds(Vector::Constant(1, -vp.c_d * vp.mass * gravity),
                       Vector::Constant(1, vp.c_a * vp.mass * gravity));
}

sim::QpCost follower_cost(const VehicleParams& vp, double v) {
  // ((u - F_r)/M)^2 + p delta^2
  const double M2 = vp.mass * vp.mass;
  const double fr = resistance_force(vp, v);
  sim::QpCost c;
  c.hessian = Matrix::Zero(2, 2);
  c.hessian(0, 0) = 2.0 / M2;
  c.hessian(1, 1) = 2.0 * vp.p;
  c.linear = Vector::Zero(2);
  c.linear(0) = -2.0 * fr / M2;
  c.constant = fr * fr / M2;
  return c;
}

Scenario build_acc_platoon(const PlatoonParams& params) {
  params.validate();
  const auto& veh = params.vehicles;

  Scenario sc;
  sc.name = "acc";
  sim::Plant& plant = sc.plant;
  plant.state_dim = 6;
  plant.control_dim = 2;
  plant.initial_state = Vector(6);
  plant.initial_state << veh[0].x0, veh[0].v0, veh[1].x0, veh[1].v0, veh[2].x0, veh[2].v0;

  plant.dynamics = [veh](double t, const Vector& x, const Vector& u) {
    Vector dx(6);
    const double u1 = lead_control(veh[0], t, x(1));
    const double inputs[3] = {u1, u(0), u(1)};
    for (int j = 0; j < 3; ++j) {
      dx(2 * j) = x(2 * j + 1);
      dx(2 * j + 1) = (inputs[j] - resistance_force(veh[j], x(2 * j + 1))) / veh[j].mass;
    }
    return dx;
  };

  for (int j = 1; j < 3; ++j) {
    const VehicleParams vp = veh[j];
    const VehicleParams lead = veh[j - 1];
    const int agent_index = j - 1;

    std::function<Signals(double, const Vector&, const Vector&)> signals;
    if (j == 1) {
      signals = [](double t, const Vector&, const Vector&) {
        Signals s;
        s.t = t;
        s.exogenous = Vector(2);
        s.exogenous << lead_acceleration(t), lead_jerk(t);
        return s;
      };
    } else {
      // Predecessor is QP controlled: its control is held over the interval,
      // so its jerk contribution is taken as zero.
      signals = [lead](double t, const Vector& x, const Vector& u) {
        Signals s;
        s.t = t;
        s.exogenous = Vector(2);
        s.exogenous << (u(0) - resistance_force(lead, x(3))) / lead.mass, 0.0;
        return s;
      };
    }

    sim::Agent agent{
        .name = "vehicle " + std::to_string(j + 1),
        .model = follower_model(vp, params.l_p),
        .hocbf = follower_hocbf(vp, params.l_p),
        .clf = follower_clf(vp),
        .feasibility = FeasibilitySpec(vp.l_f, vp.epsilon, vp.a0),
        .bounds = follower_bounds(vp, params.gravity),
        .cost = [vp](const Vector& x, const Signals&) { return follower_cost(vp, x(kV)); },
        .local_state =
            [j](const Vector& X) {
              Vector xl(4);
              xl << X(2 * (j - 1)), X(2 * (j - 1) + 1), X(2 * j), X(2 * j + 1);
              return xl;
            },
        .signals = signals,
        .control_offset = agent_index,
    };
    plant.agents.push_back(std::move(agent));
  }

  for (int j = 0; j < 3; ++j) {
    VehicleView view;
    view.label = std::to_string(j + 1);
    view.position_index = 2 * j;
    view.velocity_index = 2 * j + 1;
    view.agent = j == 0 ? -1 : j - 1;
    if (j == 0) {
      const VehicleParams lead = veh[0];
      view.open_loop_input = [lead](double t, const Vector& x) { return lead_control(lead, t, x(1)); };
    }
    sc.vehicles.push_back(std::move(view));
  }
  return sc;
}

}  // namespace cbfsafe::scenarios
