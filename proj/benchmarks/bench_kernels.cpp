#include <benchmark/benchmark.h>

#include "riemopt/manifold.hpp"
#include "riemopt/numkernel.hpp"

namespace {

using namespace riemopt;

void BM_ThinQr(benchmark::State& state) {
  const auto n = state.range(0);
  Rng rng(1);
  const Matrix a = rng.normal_matrix(n, 5);
  for (auto _ : state) benchmark::DoNotOptimize(thin_qr(a));
}
BENCHMARK(BM_ThinQr)->Arg(50)->Arg(150)->Arg(500);

void BM_SymEig(benchmark::State& state) {
  const auto n = state.range(0);
  Rng rng(2);
  const Matrix g = rng.normal_matrix(n, n);
  const Matrix a = g + g.transpose();
  for (auto _ : state) benchmark::DoNotOptimize(sym_eig(a));
}
BENCHMARK(BM_SymEig)->Arg(10)->Arg(50)->Arg(150);

void BM_Retract(benchmark::State& state, Manifold m) {
  Rng rng(3);
  const Point x = m.random_point(rng);
  const Tangent eta = 0.1 * m.proj_tangent(x, rng.normal_vector(m.ambient_len()));
  for (auto _ : state) benchmark::DoNotOptimize(m.retract(x, eta));
}
BENCHMARK_CAPTURE(BM_Retract, sphere, Manifold::sphere(100));
BENCHMARK_CAPTURE(BM_Retract, stiefel, Manifold::stiefel(150, 5));
BENCHMARK_CAPTURE(BM_Retract, grassmann, Manifold::grassmann(150, 5));
BENCHMARK_CAPTURE(BM_Retract, spd, Manifold::spd(10));

void BM_Transport(benchmark::State& state, Manifold m) {
  Rng rng(4);
  const Point x = m.random_point(rng);
  const Tangent eta = 0.1 * m.proj_tangent(x, rng.normal_vector(m.ambient_len()));
  const Tangent v = m.proj_tangent(x, rng.normal_vector(m.ambient_len()));
  const Point y = m.retract(x, eta);
  for (auto _ : state) benchmark::DoNotOptimize(m.transport(x, eta, y, v));
}
BENCHMARK_CAPTURE(BM_Transport, stiefel, Manifold::stiefel(150, 5));
BENCHMARK_CAPTURE(BM_Transport, spd, Manifold::spd(10));

}  // namespace
