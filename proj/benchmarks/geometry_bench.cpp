#include <benchmark/benchmark.h>

#include "abdoshape/geometry/marching_cubes.hpp"
#include "abdoshape/geometry/point_cloud.hpp"
#include "abdoshape/geometry/synthetic.hpp"

namespace {

using namespace abdoshape::geometry;

VoxelGrid organ_grid(int n) {
  SyntheticSpec spec;
  spec.semi_axes = {0.3 * n, 0.22 * n, 0.18 * n};
  spec.bump_amplitude = 0.04 * n;
  spec.noise_amplitude = 0.04;
  spec.seed = 11;
  return generate_synthetic(spec, {n, n, n});
}

void BM_MarchingCubes(benchmark::State& state) {
  const auto grid = organ_grid(static_cast<int>(state.range(0)));
  std::size_t triangles = 0;
  for (auto _ : state) {
    const auto mesh = marching_cubes(grid);
    triangles = mesh.triangle_count();
    benchmark::DoNotOptimize(triangles);
  }
  state.counters["triangles"] = static_cast<double>(triangles);
}
BENCHMARK(BM_MarchingCubes)->Arg(32)->Arg(64)->Arg(96)->Unit(benchmark::kMillisecond);

void BM_SampleSurface(benchmark::State& state) {
  const auto mesh = marching_cubes(organ_grid(64));
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_surface(mesh, static_cast<std::size_t>(state.range(0)), 3));
  }
}
BENCHMARK(BM_SampleSurface)->Arg(1024)->Arg(8192)->Unit(benchmark::kMicrosecond);

}  // namespace
