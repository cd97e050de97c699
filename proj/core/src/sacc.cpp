#include "cbfsafe/errors.hpp"
#include "cbfsafe/scenarios.hpp"

namespace cbfsafe::scenarios {

void SaccParams::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("sacc: ") + what);
  };
  need(v_p > 0.0, "lead speed v_p must be positive");
  need(l_p > 0.0, "safe distance l_p must be positive");
  need(k1 > 0.0 && k2 > 0.0, "HOCBF gains must be positive");
  need(u_min < 0.0 && u_max > 0.0, "bounds need u_min < 0 < u_max");
  need(k_f > 0.0 && epsilon > 0.0 && p > 0.0, "k_f, epsilon and p must be positive");
  need(v0 > 0.0, "initial speed must be positive");
}

SystemModel sacc_model(const SaccParams& sp) {
  const double vp = sp.v_p;
  auto drift = [vp](const Vector& x, const Signals&) {
    Vector f(2);
    f << vp - x(1), 0.0;
    return f;
  };
  auto actuation = [](const Vector&, const Signals&) {
    Matrix g(2, 1);
    g << 0.0, 1.0;
    return g;
  };
  LieBundle lie;
  lie.barrier = [vp](const Vector& x, const Signals&) {
    BarrierLie l;
    l.lf = {vp - x(1), 0.0, 0.0};
    l.lg_lf = Vector::Constant(1, -1.0);
    l.lg_lf_next = Vector::Zero(1);
    l.lf_of_lg_lf = Vector::Zero(1);
    l.lg_of_lg_lf = Matrix::Zero(1, 1);
    return l;
  };
  return SystemModel(2, 1, drift, actuation, lie);
}

HocbfSpec sacc_hocbf(const SaccParams& sp) {
  const double lp = sp.l_p;
  return HocbfSpec(2, {sp.k1, sp.k2}, [lp](const Vector& x, const Signals&) { return x(0) - lp; });
}

Scenario build_sacc(const SaccParams& sp) {
  sp.validate();
  Scenario sc;
  sc.name = "sacc";
  sim::Plant& plant = sc.plant;
  plant.state_dim = 2;
  plant.control_dim = 1;
  plant.initial_state = Vector(2);
  plant.initial_state << sp.z0, sp.v0;
  const SystemModel model = sacc_model(sp);
  plant.dynamics = [model](double t, const Vector& x, const Vector& u) {
    return model.dynamics(x, u, Signals{t, {}});
  };

  const double p = sp.p;
  sim::Agent agent{
      .name = "ego",
      .model = model,
      .hocbf = sacc_hocbf(sp),
      .clf = std::nullopt,
      .feasibility = FeasibilitySpec(sp.k_f, sp.epsilon, sp.a0),
      .bounds = ControlBounds(Vector::Constant(1, sp.u_min), Vector::Constant(1, sp.u_max)),
      .cost =
          [p](const Vector&, const Signals&) {
            // u^2 + p delta^2
            sim::QpCost c;
            c.hessian = Matrix::Zero(2, 2);
            c.hessian(0, 0) = 2.0;
            c.hessian(1, 1) = 2.0 * p;
            c.linear = Vector::Zero(2);
            return c;
          },
      .local_state = [](const Vector& X) { return X; },
      .signals = [](double t, const Vector&, const Vector&) { return Signals{t, {}}; },
      .control_offset = 0,
  };
  plant.agents.push_back(std::move(agent));

  VehicleView view;
  view.label = "ego";
  view.position_index = 0;
  view.velocity_index = 1;
  view.agent = 0;
  view.position_name = "z";
  sc.vehicles.push_back(std::move(view));
  return sc;
}

}  // namespace cbfsafe::scenarios
