#include <benchmark/benchmark.h>

#include <Eigen/Core>

#include "kss/chaos_expansion.hpp"
#include "kss/covariance_kernel.hpp"
#include "kss/kac_rice_moments.hpp"
#include "kss/kss_polynomial.hpp"
#include "kss/local_limit_field.hpp"
#include "kss/zero_set_volume.hpp"

namespace {

void BM_Evaluate(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const kss::KssSystem sys = kss::sample_kss(2, d, 1, 1);
  Eigen::VectorXd t(3);
  t << 0.48, -0.6, 0.64;
  for (auto _ : state) benchmark::DoNotOptimize(kss::evaluate(sys, t));
}
BENCHMARK(BM_Evaluate)->Arg(16)->Arg(100);

void BM_Marching(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const kss::SphericalMesh mesh = kss::icosphere(kss::required_mesh_level(d));
  const kss::KssSystem sys = kss::sample_kss(2, d, 1, 2);
  for (auto _ : state) benchmark::DoNotOptimize(kss::zero_length_marching(sys, mesh));
}
BENCHMARK(BM_Marching)->Arg(16)->Arg(36)->Unit(benchmark::kMillisecond);

void BM_CountRoots(benchmark::State& state) {
  const kss::KssSystem sys = kss::sample_kss(1, 25, 1, 3);
  for (auto _ : state) benchmark::DoNotOptimize(kss::count_roots_circle(sys));
}
BENCHMARK(BM_CountRoots);

void BM_Htilde(benchmark::State& state) {
  const kss::ChaosCoefficientTable table(1, 2, 8);
  const int q = static_cast<int>(state.range(0));
  double x = 0.3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(kss::htilde_qd(x, q, 64, table));
    x = x > 0.9 ? 0.3 : x + 1e-3;
  }
}
BENCHMARK(BM_Htilde)->Arg(2)->Arg(8);

void BM_ConditionalFactorExact(benchmark::State& state) {
  const kss::ConditionalLaw law = kss::conditional_law(kss::profile(0.2, 64, 2));
  for (auto _ : state) benchmark::DoNotOptimize(kss::conditional_factor_exact(law, 2));
}
BENCHMARK(BM_ConditionalFactorExact);

void BM_RandomWaveGrid(benchmark::State& state) {
  kss::Rng rng(4);
  const kss::RandomWaveField field = kss::sample_field(2, 256, rng);
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(kss::nodal_length_box(field, n));
}
BENCHMARK(BM_RandomWaveGrid)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
