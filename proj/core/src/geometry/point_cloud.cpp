#include "abdoshape/geometry/point_cloud.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "abdoshape/error.hpp"
#include "abdoshape/random.hpp"

namespace abdoshape::geometry {

PointCloud sample_surface(const TriMesh& mesh, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("sample_surface needs n >= 1");
  validate(mesh);
  std::vector<double> cumulative(mesh.triangles.size());
  double total = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    total += triangle_area(mesh, t);
    cumulative[t] = total;
  }
  if (!(total > kMinTriangleArea)) throw DataError("cannot sample a mesh with zero surface area");

  Rng rng(seed);
  PointCloud cloud;
  cloud.points.resize(static_cast<Eigen::Index>(n), 3);
  for (std::size_t i = 0; i < n; ++i) {
    const double pick = rng.uniform() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), pick);
    if (it == cumulative.end()) --it;
    const auto& tri = mesh.triangles[static_cast<std::size_t>(it - cumulative.begin())];
    double u = rng.uniform();
    double v = rng.uniform();
    if (u + v > 1.0) {
      u = 1.0 - u;
      v = 1.0 - v;
    }
    const Vec3& a = mesh.vertices[tri[0]];
    const Vec3 p = a + u * (mesh.vertices[tri[1]] - a) + v * (mesh.vertices[tri[2]] - a);
    cloud.points.row(static_cast<Eigen::Index>(i)) = p.transpose();
  }
  return cloud;
}

double rms_radius(const PointCloud& cloud) {
  if (cloud.size() == 0) return 0.0;
  return std::sqrt(cloud.points.rowwise().squaredNorm().mean());
}

PointCloud center_cloud(const PointCloud& cloud, bool unit_scale) {
  if (cloud.size() < 1) throw InvalidArgument("center_cloud needs at least one point");
  PointCloud out = cloud;
  const Eigen::RowVector3d centroid = cloud.points.colwise().mean();
  out.points.rowwise() -= centroid;
  if (unit_scale) {
    const double r = rms_radius(out);
    if (r > 0.0) out.points /= r;
  }
  return out;
}

PointCloud resample_cloud(const PointCloud& cloud, std::size_t n, std::uint64_t seed) {
  if (cloud.size() == 0) throw InvalidArgument("cannot resample an empty cloud");
  if (n == cloud.size()) return cloud;
  Rng rng(seed);
  std::vector<Eigen::Index> rows;
  if (n < cloud.size()) {
    rows.resize(cloud.size());
    std::iota(rows.begin(), rows.end(), Eigen::Index{0});
    rng.shuffle(std::span(rows));
    rows.resize(n);
    std::sort(rows.begin(), rows.end());
  } else {
    rows.resize(cloud.size());
    std::iota(rows.begin(), rows.end(), Eigen::Index{0});
    while (rows.size() < n) rows.push_back(static_cast<Eigen::Index>(rng.below(cloud.size())));
  }
  PointCloud out;
  out.points.resize(static_cast<Eigen::Index>(n), 3);
  for (std::size_t i = 0; i < n; ++i) out.points.row(static_cast<Eigen::Index>(i)) = cloud.points.row(rows[i]);
  return out;
}

}  // namespace abdoshape::geometry
