#pragma once

#include <cstddef>
#include <cstdint>

#include <Eigen/Core>

#include "abdoshape/geometry/tri_mesh.hpp"

namespace abdoshape::geometry {

using PointMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

/// n unordered surface points in mm; row i is point i.
struct PointCloud {
  PointMatrix points;

  std::size_t size() const { return static_cast<std::size_t>(points.rows()); }
};

/// Area-uniform surface sampling: triangles are drawn proportionally to area and
/// positions within a triangle uniformly via reflected barycentric coordinates.
PointCloud sample_surface(const TriMesh& mesh, std::size_t n, std::uint64_t seed);

/// Moves the centroid to the origin; with unit_scale, also divides by the RMS radius.
PointCloud center_cloud(const PointCloud& cloud, bool unit_scale = false);

/// Resamples to exactly n points. Shrinking keeps a seeded random subset;
/// growing appends points drawn with replacement.
PointCloud resample_cloud(const PointCloud& cloud, std::size_t n, std::uint64_t seed);

double rms_radius(const PointCloud& cloud);

}  // namespace abdoshape::geometry
