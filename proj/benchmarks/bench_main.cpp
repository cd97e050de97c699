#include "random_qp.hpp"

#include "cbfsafe/integrator.hpp"
#include "cbfsafe/qp.hpp"
#include "cbfsafe/scenarios.hpp"
#include "cbfsafe/sim.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

using namespace cbfsafe;

namespace {

void BM_QpRandom(benchmark::State& state) {
  std::mt19937_64 rng(11);
  std::vector<qp::QpProblem> problems;
  for (int i = 0; i < 256; ++i) problems.push_back(testing::random_qp(rng));
  const qp::ActiveSetSolver solver;
  std::size_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(solver.solve(problems[k++ % problems.size()]));
  }
}
BENCHMARK(BM_QpRandom);

// A follower QP at the platoon's initial state, including the feasibility row.
void BM_QpFollower(benchmark::State& state) {
  const auto p = scenarios::PlatoonParams::defaults(1);
  const auto sc = scenarios::build_acc_platoon(p);
  const sim::Agent& ag = sc.plant.agents[0];
  const Vector x = ag.local_state(sc.plant.initial_state);
  const Signals sig = ag.signals(0.0, sc.plant.initial_state, Vector::Zero(2));
  const FeasibilityTerms terms = feasibility_terms(ag.hocbf, ag.model, ag.bounds, x, sig);
  const double a_dot = aux_dot(ag.feasibility, terms, ag.feasibility.a0());
  const sim::QpCost cost = ag.cost(x, sig);
  qp::QpProblem problem = qp::QpProblem::make(cost.hessian, cost.linear);
  problem.rows = {hocbf_constraint_row(ag.hocbf, ag.model, x, sig),
                  clf_constraint_row(*ag.clf, ag.model, x, sig),
                  feasibility_constraint_row(ag.feasibility, terms, ag.feasibility.a0(), a_dot)};
  problem.lower(0) = ag.bounds.lower()(0);
  problem.upper(0) = ag.bounds.upper()(0);
  const qp::ActiveSetSolver solver;
  for (auto _ : state) benchmark::DoNotOptimize(solver.solve(problem));
}
BENCHMARK(BM_QpFollower);

void BM_Dopri5Decay(benchmark::State& state) {
  const OdeRhs rhs = [](double, const Vector& y) -> Vector { return -y; };
  const Vector y0 = Vector::Ones(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(integrate_dopri5(rhs, 0.0, 0.1, y0));
}
BENCHMARK(BM_Dopri5Decay)->Arg(1)->Arg(6);

void BM_AccRun(benchmark::State& state) {
  const auto sc = scenarios::build_acc_platoon(scenarios::PlatoonParams::defaults(1));
  sim::SimConfig cfg;
  cfg.feasibility_enabled = state.range(0) != 0;
  cfg.policy = sim::InfeasibilityPolicy::DropControlBounds;
  for (auto _ : state) benchmark::DoNotOptimize(sim::run(sc.plant, cfg));
}
BENCHMARK(BM_AccRun)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);

void BM_SaccRun(benchmark::State& state) {
  const auto sc = scenarios::build_sacc(scenarios::SaccParams{});
  const sim::SimConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(sim::run(sc.plant, cfg));
}
BENCHMARK(BM_SaccRun)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
