#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "lie_check.hpp"

#include "cbfsafe/errors.hpp"
#include "cbfsafe/scenarios.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace cbfsafe;
using namespace cbfsafe::scenarios;
using doctest::Approx;

namespace {

constexpr double kFdTol = 1e-5;

Vector vec4(double a, double b, double c, double d) {
  Vector v(4);
  v << a, b, c, d;
  return v;
}

}  // namespace

TEST_CASE("resistance force") {
  const VehicleParams vp;
  CHECK(resistance_force(vp, 10.0) == Approx(75.1).epsilon(1e-15));
  CHECK(resistance_force(vp, 1e-12) == Approx(0.1).epsilon(1e-9));
  CHECK(resistance_force_slope(vp, 20.0) == Approx(15.0).epsilon(1e-15));
  CHECK_THROWS_AS(resistance_force(vp, 0.0), DomainError);
  CHECK_THROWS_AS(resistance_force(vp, -1.0), DomainError);
  CHECK_THROWS_AS(resistance_force_slope(vp, 0.0), DomainError);
}

TEST_CASE("lead vehicle control") {
  const auto p = PlatoonParams::defaults(1);
  const auto& v1 = p.vehicles[0];
  const double fr = 0.1 + 5.0 * 13.89 + 0.25 * 13.89 * 13.89;
  CHECK(lead_control(v1, 0.0, 13.89) == Approx(fr).epsilon(1e-15));
  CHECK(lead_control(v1, 0.0, 13.89) == Approx(117.783025).epsilon(1e-12));
  CHECK(lead_control(v1, 0.25, 13.89) == Approx(2.0 * 1500.0 + fr).epsilon(1e-15));
  CHECK(std::abs(lead_acceleration(0.5)) < 1e-12);
  CHECK(lead_jerk(0.0) == Approx(4.0 * std::numbers::pi));
}

TEST_CASE("platoon defaults follow the two bound cases") {
  const auto c1 = PlatoonParams::defaults(1);
  const auto c2 = PlatoonParams::defaults(2);
  CHECK(c1.vehicles[1].mass == 1650.0);
  CHECK(c1.vehicles[2].mass == 1550.0);
  CHECK(c1.vehicles[1].c_d == 0.4);
  CHECK(c1.vehicles[2].c_d == 0.35);
  CHECK(c1.vehicles[1].l_f == 0.1);
  CHECK(c2.vehicles[1].c_d == 0.2);
  CHECK(c2.vehicles[2].c_d == 0.25);
  CHECK(c2.vehicles[2].l_f == 0.05);
  CHECK(c1.lower_bound(1) == Approx(-6474.6).epsilon(1e-14));
  CHECK(c1.upper_bound(2) == Approx(0.35 * 1550.0 * 9.81).epsilon(1e-14));
  CHECK_THROWS_AS(PlatoonParams::defaults(3), ConfigError);
}

TEST_CASE("platoon validation") {
  auto p = PlatoonParams::defaults(1);
  p.vehicles[2].x0 = -50.0;
  CHECK_THROWS_AS(build_acc_platoon(p), ConfigError);
  p = PlatoonParams::defaults(1);
  p.vehicles[1].mass = 0.0;
  CHECK_THROWS_AS(build_acc_platoon(p), ConfigError);
  p = PlatoonParams::defaults(1);
  p.vehicles[1].f1 = -1.0;
  CHECK_THROWS_AS(build_acc_platoon(p), ConfigError);
  p = PlatoonParams::defaults(1);
  p.vehicles[2].v_desired = 0.0;
  CHECK_THROWS_AS(build_acc_platoon(p), ConfigError);
  SaccParams s;
  s.v_p = 0.0;
  CHECK_THROWS_AS(build_sacc(s), ConfigError);
}

TEST_CASE("platoon bundle at the initial state") {
  const auto p = PlatoonParams::defaults(1);
  const Scenario sc = build_acc_platoon(p);
  REQUIRE(sc.plant.agents.size() == 2);
  REQUIRE(sc.vehicles.size() == 3);
  const Vector X = sc.plant.initial_state;
  const Vector U = Vector::Zero(2);
  for (int i = 0; i < 2; ++i) {
    const auto& ag = sc.plant.agents[i];
    const Signals s = ag.signals(0.0, X, U);
    const Vector x = ag.local_state(X);
    CHECK(ag.hocbf.barrier(x, s) == Approx(i == 0 ? 90.0 : 80.0).epsilon(1e-15));
    CHECK(ag.model.barrier_lie(x, s).lg_lf(0) == -1.0 / p.vehicles[i + 1].mass);
  }

  const auto& a2 = sc.plant.agents[0];
  const FeasibilityTerms t =
      feasibility_terms(a2.hocbf, a2.model, a2.bounds, a2.local_state(X), a2.signals(0.0, X, U));
  const double M = 1650.0;
  CHECK(t.lg_b_f(0) == Approx(9.0 / (M * M) - 2.0 / M).epsilon(1e-14));
  CHECK(t.lg_b_f(0) == Approx(3.306e-6 - 1.212e-3).epsilon(1e-3));
  CHECK(t.u_m(0) == Approx(-0.4 * M * 9.81).epsilon(1e-15));
}

TEST_CASE("SACC bundle") {
  const SaccParams sp;
  const Scenario sc = build_sacc(sp);
  REQUIRE(sc.plant.agents.size() == 1);
  const auto& ag = sc.plant.agents[0];
  Vector x(2);
  x << 50.0, 10.0;
  const auto psi = psi_sequence(ag.hocbf, ag.model, x, {});
  CHECK(psi[0] == Approx(40.0));
  CHECK(psi[1] == Approx(7.89));
  x << sp.l_p, sp.v_p;
  for (double v : psi_sequence(ag.hocbf, ag.model, x, {})) CHECK(v == 0.0);
  const FeasibilityTerms t = feasibility_terms(ag.hocbf, ag.model, ag.bounds, x, {});
  CHECK(t.u_m(0) == sp.u_min);
  CHECK_FALSE(ag.clf.has_value());
}

TEST_CASE("analytic Lie derivatives match finite differences") {
  const auto sweeps = cbfsafe::testing::lie_sweep(42, 100);
  REQUIRE(sweeps.size() == 3);
  for (const auto& sw : sweeps) {
    CAPTURE(sw.name);
    CHECK(sw.states == 100);
    CHECK(sw.worst.relative < kFdTol);
    // The control does not appear before order m.
    CHECK(sw.worst.control_leak < 1e-9);
  }
}

TEST_CASE("generic HOCBF row equals the hand-expanded follower constraint") {
  const auto p = PlatoonParams::defaults(2);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> speed(1.0, 35.0), gap(11.0, 200.0), accel(-3.0, 3.0),
      control(-8000.0, 8000.0);
  for (int j = 1; j < 3; ++j) {
    const VehicleParams& vp = p.vehicles[j];
    const auto sys = follower_model(vp, p.l_p);
    const auto spec = follower_hocbf(vp, p.l_p);
    for (int i = 0; i < 100; ++i) {
      const double vl = speed(rng), v = speed(rng), a_l = accel(rng), u = control(rng);
      const Vector x = vec4(0.0, vl, -gap(rng), v);
      const Signals s{0.0, (Vector(2) << a_l, 0.0).finished()};
      const double b = x(0) - x(2) - p.l_p;
      const double lfb = vl - v;
      const double psi1 = lfb + vp.k1 * b;
      const double psi2 = a_l + resistance_force(vp, v) / vp.mass - u / vp.mass + vp.k1 * lfb +
                          vp.k2 * psi1;
      const ConstraintRow row = hocbf_constraint_row(spec, sys, x, s);
      const double generic = row.slack((Vector(2) << u, 0.0).finished());
      const double scale = std::abs(a_l) + std::abs(u / vp.mass) + std::abs(vp.k1 * lfb) +
                           std::abs(vp.k2 * psi1) + resistance_force(vp, v) / vp.mass;
      CHECK(std::abs(generic - psi2) <= 1e-12 * scale);
    }
  }
}

TEST_CASE("lead vehicle follows its closed-form speed inside the platoon") {
  const auto p = PlatoonParams::defaults(1);
  const Scenario sc = build_acc_platoon(p);
  sim::SimConfig cfg;
  const sim::SimTrace tr = sim::run(sc.plant, cfg);
  REQUIRE(tr.samples.size() == 301);
  for (const auto& s : tr.samples) {
    const double exact = p.vehicles[0].v0 + (1.0 - std::cos(2.0 * std::numbers::pi * s.t)) / std::numbers::pi;
    CHECK(std::abs(s.state(1) - exact) < 1e-5);
  }
}
