#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <set>

#include <gtest/gtest.h>

#include "abdoshape/error.hpp"
#include "abdoshape/geometry/io.hpp"
#include "abdoshape/geometry/marching_cubes.hpp"
#include "abdoshape/geometry/point_cloud.hpp"
#include "abdoshape/geometry/synthetic.hpp"
#include "abdoshape/geometry/tri_mesh.hpp"
#include "property.hpp"

namespace g = abdoshape::geometry;
using abdoshape::Rng;
using abdoshape::testing::for_all_seeds;
using abdoshape::testing::random_spec;

namespace {

g::TriMesh single_triangle(g::Vec3 a, g::Vec3 b, g::Vec3 c) {
  g::TriMesh m;
  m.vertices = {a, b, c};
  m.triangles = {{0, 1, 2}};
  return m;
}

// Upper 99% point of chi-square by the Wilson-Hilferty approximation.
double chi_square_q99(double df) {
  const double z = 2.3263478740408408;
  const double t = 2.0 / (9.0 * df);
  return df * std::pow(1.0 - t + z * std::sqrt(t), 3.0);
}

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("abdoshape_geometry_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST(VoxelGrid, RejectsInvalidDimensionsAndSpacing) {
  EXPECT_THROW(g::VoxelGrid({0, 2, 2}), abdoshape::InvalidArgument);
  EXPECT_THROW(g::VoxelGrid({2, 2, 2}, {1.0, -1.0, 1.0}), abdoshape::InvalidArgument);
  EXPECT_THROW(g::VoxelGrid({2, 2, 2}, {1, 1, 1}, {0, 0, 0}, std::vector<std::uint8_t>(7)),
               abdoshape::InvalidArgument);
}

TEST(VoxelGrid, XFastestLayout) {
  g::VoxelGrid grid({3, 4, 5});
  EXPECT_EQ(grid.index(1, 0, 0), 1u);
  EXPECT_EQ(grid.index(0, 1, 0), 3u);
  EXPECT_EQ(grid.index(0, 0, 1), 12u);
  grid.set(2, 3, 4, true);
  EXPECT_EQ(grid.occupied_count(), 1u);
  EXPECT_EQ(grid.occupancy().back(), 1);
}

TEST(MarchingCubes, SingleVoxelGivesSphereTopology) {
  g::VoxelGrid grid({3, 3, 3});
  grid.set(1, 1, 1, true);
  const auto mesh = g::marching_cubes(grid);
  // Counted independently of euler_characteristic().
  std::set<std::pair<int, int>> edges;
  for (const auto& t : mesh.triangles) {
    for (int e = 0; e < 3; ++e) edges.insert(std::minmax(t[e], t[(e + 1) % 3]));
  }
  const long chi = static_cast<long>(mesh.vertices.size()) - static_cast<long>(edges.size()) +
                   static_cast<long>(mesh.triangles.size());
  EXPECT_EQ(chi, 2);
  EXPECT_EQ(mesh.vertices.size(), 6u);  // octahedron at the six edge midpoints
  EXPECT_EQ(mesh.triangles.size(), 8u);
  EXPECT_TRUE(g::check_manifold(mesh).closed_manifold());
  EXPECT_GT(g::signed_volume(mesh), 0.0);
}

TEST(MarchingCubes, EmptyGridIsAnError) {
  EXPECT_THROW(g::marching_cubes(g::VoxelGrid({4, 4, 4})), abdoshape::EmptySurfaceError);
}

TEST(MarchingCubes, RejectsIsoOutsideUnitInterval) {
  g::VoxelGrid grid({3, 3, 3});
  grid.set(1, 1, 1, true);
  EXPECT_THROW(g::marching_cubes(grid, 0.0), abdoshape::InvalidArgument);
  EXPECT_THROW(g::marching_cubes(grid, 1.0), abdoshape::InvalidArgument);
}

TEST(MarchingCubes, BallAreaApproachesSphere) {
  const auto mesh = g::marching_cubes(g::voxelize_ball(8.0, {20, 20, 20}));
  const double exact = 4.0 * std::numbers::pi * 64.0;
  EXPECT_NEAR(g::surface_area(mesh), exact, 0.10 * exact);
  EXPECT_TRUE(g::check_manifold(mesh).closed_manifold());
  EXPECT_EQ(g::euler_characteristic(mesh), 2);
}

TEST(MarchingCubes, SpacingAndOriginAreApplied) {
  g::VoxelGrid grid({3, 3, 3}, {2.0, 3.0, 4.0}, {10.0, 20.0, 30.0});
  grid.set(1, 1, 1, true);
  const auto mesh = g::marching_cubes(grid);
  g::Vec3 lo = mesh.vertices[0], hi = mesh.vertices[0];
  for (const auto& v : mesh.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  // Center voxel at origin + spacing, vertices half a voxel away.
  EXPECT_TRUE(lo.isApprox(g::Vec3(11.0, 21.5, 32.0)));
  EXPECT_TRUE(hi.isApprox(g::Vec3(13.0, 24.5, 36.0)));
}

TEST(MarchingCubes, TorusHasEulerCharacteristicZero) {
  const auto mesh = g::marching_cubes(g::voxelize_torus(8.0, 3.0, {28, 28, 14}));
  EXPECT_TRUE(g::check_manifold(mesh).closed_manifold());
  EXPECT_EQ(g::euler_characteristic(mesh), 0);
}

TEST(MarchingCubes, DiagonalVoxelsStayManifold) {
  // Voxels touching only along an edge or a corner.
  g::VoxelGrid grid({4, 4, 4});
  grid.set(1, 1, 1, true);
  grid.set(2, 2, 1, true);
  grid.set(2, 1, 2, true);
  grid.set(1, 2, 2, true);
  const auto mesh = g::marching_cubes(grid);
  EXPECT_TRUE(g::check_manifold(mesh).closed_manifold());
}

TEST(MarchingCubesProperty, RandomNoiseGridsAreClosedManifolds) {
  for_all_seeds(40, 11, [](Rng& rng, std::uint64_t) {
    g::VoxelGrid grid({7, 6, 5});
    for (int k = 1; k < 4; ++k) {
      for (int j = 1; j < 5; ++j) {
        for (int i = 1; i < 6; ++i) grid.set(i, j, k, rng.uniform() < 0.45);
      }
    }
    if (grid.occupied_count() == 0) return;
    const auto mesh = g::marching_cubes(grid);
    const auto report = g::check_manifold(mesh);
    EXPECT_TRUE(report.closed_manifold()) << report.boundary_edges << " boundary, " << report.nonmanifold_edges
                                          << " non-manifold, " << report.inconsistent_edges << " inconsistent";
  });
}

TEST(MarchingCubesProperty, SyntheticShapesAreGenusZero) {
  for_all_seeds(12, 12, [](Rng& rng, std::uint64_t) {
    const auto grid = g::generate_synthetic(random_spec(rng), {28, 28, 28});
    const auto mesh = g::marching_cubes(grid);
    EXPECT_TRUE(g::check_manifold(mesh).closed_manifold());
    EXPECT_EQ(g::euler_characteristic(mesh), 2);
    EXPECT_EQ(g::connected_components(mesh), 1);
    EXPECT_GT(g::signed_volume(mesh), 0.0);
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) EXPECT_GE(g::triangle_area(mesh, t), g::kMinTriangleArea);
  });
}

TEST(MarchingCubes, Deterministic) {
  Rng rng(5);
  const auto grid = g::generate_synthetic(random_spec(rng), {28, 28, 28});
  const auto a = g::marching_cubes(grid);
  const auto b = g::marching_cubes(grid);
  EXPECT_EQ(a.vertices, b.vertices);
  EXPECT_EQ(a.triangles, b.triangles);
}

TEST(SurfaceArea, RightTriangle) {
  EXPECT_DOUBLE_EQ(g::surface_area(single_triangle({0, 0, 0}, {3, 0, 0}, {0, 4, 0})), 6.0);
}

TEST(SurfaceArea, IcosphereApproachesSphere) {
  EXPECT_NEAR(g::surface_area(g::icosphere(4)), 4.0 * std::numbers::pi, 0.005 * 4.0 * std::numbers::pi);
}

TEST(SurfaceArea, ScalesQuadratically) {
  const auto mesh = g::icosphere(2, 1.7);
  EXPECT_DOUBLE_EQ(g::surface_area(g::scaled(mesh, 2.0)), 4.0 * g::surface_area(mesh));
}

TEST(EulerCharacteristic, BasicShapes) {
  EXPECT_EQ(g::euler_characteristic(g::icosphere(3)), 2);
  EXPECT_EQ(g::euler_characteristic(single_triangle({0, 0, 0}, {1, 0, 0}, {0, 1, 0})), 1);
}

TEST(Icosphere, CountsAndRadius) {
  const auto s0 = g::icosphere(0);
  EXPECT_EQ(s0.vertices.size(), 12u);
  EXPECT_EQ(s0.triangles.size(), 20u);
  for (int s = 0; s <= 4; ++s) {
    const auto mesh = g::icosphere(s, 2.5);
    EXPECT_EQ(mesh.vertices.size(), 10u * (1u << (2 * s)) + 2u);
    EXPECT_EQ(mesh.triangles.size(), 20u * (1u << (2 * s)));
    for (const auto& v : mesh.vertices) EXPECT_NEAR(v.norm(), 2.5, 1e-12);
    EXPECT_TRUE(g::check_manifold(mesh).closed_manifold());
    EXPECT_GT(g::signed_volume(mesh), 0.0);
  }
  EXPECT_THROW(g::icosphere(8), abdoshape::InvalidArgument);
}

TEST(CleanMesh, WeldsDuplicatesAndDropsDegenerates) {
  g::TriMesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 0, 1e-12}, {2, 0, 0}, {5, 5, 5}};
  m.triangles = {{0, 1, 2}, {0, 3, 1}, {0, 1, 4}};
  const auto c = g::clean_mesh(m);
  EXPECT_EQ(c.triangles.size(), 1u);
  EXPECT_EQ(c.vertices.size(), 3u);
}

TEST(SampleSurface, PointsLieInTriangle) {
  const auto tri = single_triangle({0, 0, 0}, {2, 0, 0}, {0, 1, 0});
  const auto cloud = g::sample_surface(tri, 100, 3);
  ASSERT_EQ(cloud.size(), 100u);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const double x = cloud.points(static_cast<Eigen::Index>(i), 0);
    const double y = cloud.points(static_cast<Eigen::Index>(i), 1);
    const double b1 = x / 2.0;
    const double b2 = y;
    const double b0 = 1.0 - b1 - b2;
    EXPECT_GE(b0, -1e-12);
    EXPECT_GE(b1, -1e-12);
    EXPECT_GE(b2, -1e-12);
    EXPECT_NEAR(b0 + b1 + b2, 1.0, 1e-12);
    EXPECT_EQ(cloud.points(static_cast<Eigen::Index>(i), 2), 0.0);
  }
}

TEST(SampleSurface, AreaProportionalBinomial) {
  g::TriMesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {10, 0, 0}, {13, 0, 0}, {10, 1, 0}};
  m.triangles = {{0, 1, 2}, {3, 4, 5}};
  const std::size_t n = 40000;
  const auto cloud = g::sample_surface(m, n, 77);
  std::size_t first = 0;
  for (std::size_t i = 0; i < n; ++i) first += cloud.points(static_cast<Eigen::Index>(i), 0) < 5.0 ? 1 : 0;
  const double expected = 0.25 * n;
  const double sd = std::sqrt(n * 0.25 * 0.75);
  EXPECT_LT(std::abs(static_cast<double>(first) - expected) / sd, 2.5758293035489);
}

TEST(SampleSurface, ChiSquareOverManyTriangles) {
  const auto mesh = g::icosphere(3, 5.0);
  const std::size_t n = 40000;
  const auto cloud = g::sample_surface(mesh, n, 9);
  // Attribute each point to the triangle whose plane it lies in and whose barycentrics are valid.
  std::vector<double> counts(mesh.triangles.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const g::Vec3 p = cloud.points.row(static_cast<Eigen::Index>(i)).transpose();
    double best = 1e300;
    std::size_t arg = 0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
      const auto& tri = mesh.triangles[t];
      const g::Vec3& a = mesh.vertices[tri[0]];
      const g::Vec3& b = mesh.vertices[tri[1]];
      const g::Vec3& c = mesh.vertices[tri[2]];
      const g::Vec3 nrm = (b - a).cross(c - a);
      const double area2 = nrm.norm();
      const double u = (c - b).cross(p - b).dot(nrm) / (area2 * area2);
      const double v = (a - c).cross(p - c).dot(nrm) / (area2 * area2);
      const double w = 1.0 - u - v;
      const double outside = std::max({0.0, -u, -v, -w}) + std::abs((p - a).dot(nrm)) / area2;
      if (outside < best) {
        best = outside;
        arg = t;
      }
    }
    counts[arg] += 1.0;
  }
  const double total_area = g::surface_area(mesh);
  double chi2 = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const double expected = n * g::triangle_area(mesh, t) / total_area;
    chi2 += (counts[t] - expected) * (counts[t] - expected) / expected;
  }
  EXPECT_LT(chi2, chi_square_q99(static_cast<double>(mesh.triangles.size() - 1)));
}

TEST(SampleSurface, DeterministicPerSeed) {
  const auto mesh = g::icosphere(2);
  EXPECT_EQ(g::sample_surface(mesh, 500, 1).points, g::sample_surface(mesh, 500, 1).points);
  EXPECT_NE(g::sample_surface(mesh, 500, 1).points, g::sample_surface(mesh, 500, 2).points);
}

TEST(SampleSurface, RejectsZeroAreaAndZeroCount) {
  g::TriMesh flat = single_triangle({0, 0, 0}, {1, 0, 0}, {2, 0, 0});
  EXPECT_THROW(g::sample_surface(flat, 10, 0), abdoshape::DataError);
  EXPECT_THROW(g::sample_surface(g::icosphere(1), 0, 0), abdoshape::InvalidArgument);
}

TEST(CenterCloud, SubtractsCentroid) {
  g::PointCloud c;
  c.points.resize(2, 3);
  c.points << 1, 1, 1, 3, 1, 1;
  const auto out = g::center_cloud(c);
  g::PointMatrix expected(2, 3);
  expected << -1, 0, 0, 1, 0, 0;
  EXPECT_EQ(out.points, expected);
  EXPECT_EQ(g::center_cloud(out).points, out.points);
}

TEST(CenterCloudProperty, UnitScaleGivesUnitRms) {
  for_all_seeds(20, 13, [](Rng& rng, std::uint64_t) {
    g::PointCloud c;
    c.points.resize(50, 3);
    for (Eigen::Index i = 0; i < 50; ++i) {
      for (int d = 0; d < 3; ++d) c.points(i, d) = rng.normal(5.0, 3.0);
    }
    EXPECT_NEAR(g::rms_radius(g::center_cloud(c, true)), 1.0, 1e-12);
  });
}

TEST(ResampleCloud, ExactCountBothDirections) {
  const auto cloud = g::sample_surface(g::icosphere(2), 100, 4);
  EXPECT_EQ(g::resample_cloud(cloud, 40, 1).size(), 40u);
  EXPECT_EQ(g::resample_cloud(cloud, 250, 1).size(), 250u);
}

TEST(Synthetic, PlainBallVolume) {
  g::SyntheticSpec spec;
  spec.semi_axes = {8, 8, 8};
  const auto grid = g::generate_synthetic(spec, {24, 24, 24});
  const double exact = 4.0 / 3.0 * std::numbers::pi * 512.0;
  EXPECT_NEAR(static_cast<double>(grid.occupied_count()), exact, 0.05 * exact);
}

TEST(Synthetic, DeterministicAndBumpInflates) {
  g::SyntheticSpec spec;
  spec.noise_amplitude = 0.05;
  spec.seed = 99;
  EXPECT_EQ(g::generate_synthetic(spec, {36, 36, 36}), g::generate_synthetic(spec, {36, 36, 36}));
  auto bumped = spec;
  bumped.bump_amplitude = 3.0;
  EXPECT_GT(g::generate_synthetic(bumped, {36, 36, 36}).occupied_count(),
            g::generate_synthetic(spec, {36, 36, 36}).occupied_count());
}

TEST(Synthetic, ShapeExceedingGridIsAnError) {
  g::SyntheticSpec spec;
  spec.semi_axes = {20, 8, 6};
  EXPECT_THROW(g::generate_synthetic(spec, {24, 24, 24}), abdoshape::InvalidArgument);
  spec.semi_axes = {8, -1, 6};
  EXPECT_THROW(g::generate_synthetic(spec, {24, 24, 24}), abdoshape::InvalidArgument);
}

TEST(GeometryIo, VoxelRoundTrip) {
  const auto dir = temp_dir("vox");
  g::SyntheticSpec spec;
  spec.seed = 3;
  spec.noise_amplitude = 0.05;
  auto grid = g::generate_synthetic(spec, {30, 24, 20}, {1.5, 1.5, 2.0});
  g::write_voxels(dir / "a.vox", grid);
  const auto back = g::read_voxels(dir / "a.vox");
  EXPECT_EQ(back.dims(), grid.dims());
  EXPECT_EQ(back.occupancy(), grid.occupancy());
  EXPECT_EQ(back.spacing(), grid.spacing());  // values representable in f32
}

TEST(GeometryIo, VoxelRejectsBadMagicAndTruncation) {
  const auto dir = temp_dir("vox_bad");
  g::write_file_atomic(dir / "bad.vox", "VOX2xxxxxxxx");
  EXPECT_THROW(g::read_voxels(dir / "bad.vox"), abdoshape::DataError);
  g::VoxelGrid grid({3, 3, 3});
  g::write_voxels(dir / "ok.vox", grid);
  std::filesystem::resize_file(dir / "ok.vox", std::filesystem::file_size(dir / "ok.vox") - 1);
  EXPECT_THROW(g::read_voxels(dir / "ok.vox"), abdoshape::DataError);
  EXPECT_THROW(g::read_voxels(dir / "missing.vox"), abdoshape::DataError);
}

TEST(GeometryIo, OffRoundTripIsExact) {
  const auto dir = temp_dir("off");
  const auto mesh = g::transformed(g::icosphere(2, 3.3), Eigen::Isometry3d(Eigen::Translation3d(0.1, 0.2, 0.3)));
  g::write_off(dir / "m.off", mesh);
  const auto back = g::read_off(dir / "m.off");
  EXPECT_EQ(back.vertices, mesh.vertices);
  EXPECT_EQ(back.triangles, mesh.triangles);
}

TEST(GeometryIo, CloudRoundTripAtSinglePrecision) {
  const auto dir = temp_dir("pcl");
  const auto cloud = g::sample_surface(g::icosphere(2, 10.0), 64, 1);
  g::write_cloud(dir / "c.pcl", cloud);
  const auto back = g::read_cloud(dir / "c.pcl");
  ASSERT_EQ(back.size(), 64u);
  EXPECT_LT((back.points - cloud.points).cwiseAbs().maxCoeff(), 1e-5);
  EXPECT_EQ(std::filesystem::file_size(dir / "c.pcl"), 8u + 64u * 12u);
}
