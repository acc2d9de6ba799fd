#include <benchmark/benchmark.h>

#include "riemopt/stats/made.hpp"
#include "riemopt/stats/mvn.hpp"
#include "riemopt/stats/pfc.hpp"

namespace {

using namespace riemopt;
using namespace riemopt::stats;

void BM_PfcUnstructuredGradient(benchmark::State& state) {
  const PfcData data = pfc_simulate(300, 10, 1, PfcStructure::kUnstructured).data;
  const Problem problem = pfc_unstructured_problem(data);
  Point x(10 * 2 + 100);
  x.head(20) = as_vector(leading_eigenvectors(data.sigma, 2));
  x.tail(100) = as_vector(data.sigma);
  for (auto _ : state) benchmark::DoNotOptimize(problem.egrad(x));
}
BENCHMARK(BM_PfcUnstructuredGradient);

void BM_MvnGradient(benchmark::State& state) {
  const Matrix data = mvn_simulate(400, mvn_truth(3), 1);
  const Problem problem = mvn_problem(data);
  const Point x = mvn_start(3);
  for (auto _ : state) benchmark::DoNotOptimize(problem.egrad(x));
}
BENCHMARK(BM_MvnGradient);

void BM_MadeFit(benchmark::State& state) {
  Vector beta(3);
  beta << 1.0, 0.5, -0.5;
  const MadeData data = made_simulate(147, beta, 1);
  for (auto _ : state) benchmark::DoNotOptimize(made_fit(data, std::nullopt));
}
BENCHMARK(BM_MadeFit)->Unit(benchmark::kMillisecond);

void BM_PfcEnvelopeManifoldFit(benchmark::State& state) {
  const PfcData data = pfc_simulate(300, 10, 1, PfcStructure::kEnvelope).data;
  for (auto _ : state) {
    benchmark::DoNotOptimize(pfc_envelope_manifold_fit(data, pfc_default_config()));
  }
}
BENCHMARK(BM_PfcEnvelopeManifoldFit)->Unit(benchmark::kMillisecond);

}  // namespace
