#include <benchmark/benchmark.h>

#include "riemopt/solver.hpp"
#include "riemopt/stats/brockett.hpp"

namespace {

using namespace riemopt;

// Full Brockett solve (n = 150, p = 5) from the identity columns.
void BM_BrockettSolve(benchmark::State& state, Method method) {
  const stats::BrockettInstance inst = stats::brockett_random(150, 5, 1234);
  const Problem problem = stats::brockett_problem(inst);
  const Manifold manifold = stats::brockett_manifold(inst);
  const Point x0 = stats::brockett_identity_start(150, 5);
  SolverConfig config;
  config.method = method;
  config.tolerance = 1e-6;
  config.max_iteration = 5000;
  int iterations = 0;
  for (auto _ : state) {
    const OptimResult r = solve(problem, manifold, config, x0);
    iterations = r.iter;
    benchmark::DoNotOptimize(r.fval);
  }
  state.counters["iter"] = iterations;
}
BENCHMARK_CAPTURE(BM_BrockettSolve, RCG, Method::kRCG)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_BrockettSolve, RBFGS, Method::kRBFGS)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_BrockettSolve, LRBFGS, Method::kLRBFGS)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_BrockettSolve, RTRNewton, Method::kRTRNewton)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_BrockettSolve, LRTRSR1, Method::kLRTRSR1)->Unit(benchmark::kMillisecond);

}  // namespace
