#include <benchmark/benchmark.h>

#include "abdoshape/geometry/tri_mesh.hpp"
#include "abdoshape/spectra/eigensolver.hpp"
#include "abdoshape/spectra/fem.hpp"
#include "abdoshape/spectra/shape_dna.hpp"

namespace {

using namespace abdoshape;

void BM_AssembleFem(benchmark::State& state) {
  const auto mesh = geometry::icosphere(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(spectra::assemble_fem(mesh));
  state.counters["vertices"] = static_cast<double>(mesh.vertex_count());
}
BENCHMARK(BM_AssembleFem)->DenseRange(3, 5)->Unit(benchmark::kMillisecond);

// FEM assembly plus the sparse eigensolve, as in featurization.
void BM_ShapeDna(benchmark::State& state) {
  const auto mesh = geometry::icosphere(static_cast<int>(state.range(0)));
  const int l = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(spectra::shape_dna(mesh, l));
  state.counters["vertices"] = static_cast<double>(mesh.vertex_count());
}
BENCHMARK(BM_ShapeDna)->Args({3, 9})->Args({4, 9})->Args({4, 50})->Unit(benchmark::kMillisecond);

void BM_DenseSolve(benchmark::State& state) {
  const auto fem = spectra::assemble_fem(geometry::icosphere(2));
  for (auto _ : state) benchmark::DoNotOptimize(spectra::solve_dense(fem, 10));
}
BENCHMARK(BM_DenseSolve)->Unit(benchmark::kMillisecond);

}  // namespace
