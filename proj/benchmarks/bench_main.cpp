#include <benchmark/benchmark.h>

#include "sphere_euler/euler_solver.hpp"
#include "sphere_euler/helmholtz.hpp"
#include "sphere_euler/jko.hpp"

using namespace sphere_euler;

namespace {

ScalarField zonal(const Mesh& m, double a) {
  ScalarField f(Eigen::Index(m.size()));
  for (std::size_t i = 0; i < m.size(); ++i) f[Eigen::Index(i)] = 1.0 + a * m.nodes[i].z();
  return normalize_density(m, f);
}

}  // namespace

static void BuildIcosphere(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(build_icosphere(int(state.range(0))));
}
BENCHMARK(BuildIcosphere)->DenseRange(2, 5)->Unit(benchmark::kMillisecond);

static void ExactTransport(benchmark::State& state) {
  auto m = build_icosphere(int(state.range(0)));
  const ScalarField a = zonal(*m, 0.3), b = uniform_density(*m);
  for (auto _ : state) benchmark::DoNotOptimize(w2_squared(*m, a, b));
}
BENCHMARK(ExactTransport)->DenseRange(1, 3)->Unit(benchmark::kMillisecond);

static void CTransform(benchmark::State& state) {
  auto m = build_icosphere(int(state.range(0)));
  const ScalarField phi = zonal(*m, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(c_transform(*m, phi));
}
BENCHMARK(CTransform)->DenseRange(1, 3)->Unit(benchmark::kMillisecond);

static void WeightedDecompose(benchmark::State& state) {
  auto m = build_icosphere(int(state.range(0)));
  const ScalarField rho = zonal(*m, 0.3);
  ScalarField q(rho.size());
  for (std::size_t i = 0; i < m->size(); ++i) q[Eigen::Index(i)] = m->nodes[i].x() * m->nodes[i].z();
  const VectorField V = cross_normal(*m, gradient(*m, q)) + gradient(*m, q);
  for (auto _ : state) benchmark::DoNotOptimize(weighted_decompose(*m, V, rho));
}
BENCHMARK(WeightedDecompose)->DenseRange(3, 5)->Unit(benchmark::kMillisecond);

static void CorrectorStep(benchmark::State& state) {
  auto m = build_icosphere(int(state.range(0)));
  const auto th = ThetaModel::power(1.4);
  const ScalarField f = zonal(*m, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(jko_step(*m, f, 0.05, th));
}
BENCHMARK(CorrectorStep)->DenseRange(3, 5)->Unit(benchmark::kMillisecond);

static void SolverStep(benchmark::State& state) {
  auto m = build_icosphere(int(state.range(0)));
  RunConfig c;
  c.mesh = m;
  c.h = 0.02;
  c.tau = 0.02;
  c.ledger_transport = false;
  c.initial = zonal_preset(*m, 0.2, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(run(c));
}
BENCHMARK(SolverStep)->DenseRange(3, 4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
