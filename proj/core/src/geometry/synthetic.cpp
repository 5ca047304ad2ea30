#include "abdoshape/geometry/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "abdoshape/error.hpp"
#include "abdoshape/random.hpp"

namespace abdoshape::geometry {
namespace {

struct Ridge {
  Vec3 direction;
  double frequency;
  double phase;
  double weight;
};

std::array<Ridge, 4> draw_ridges(std::uint64_t seed) {
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::array<Ridge, 4> ridges;
  double weight_sum = 0.0;
  for (auto& r : ridges) {
    Vec3 d(rng.normal(), rng.normal(), rng.normal());
    if (d.norm() < 1e-12) d = Vec3::UnitX();
    r.direction = d.normalized();
    r.frequency = rng.uniform(1.0, 2.5);
    r.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    r.weight = rng.uniform(0.5, 1.0);
    weight_sum += r.weight;
  }
  for (auto& r : ridges) r.weight /= weight_sum;
  return ridges;
}

void check_spec(const SyntheticSpec& spec) {
  if (!(spec.semi_axes.minCoeff() > 0.0)) throw InvalidArgument("semi-axes must be > 0");
  if (!(spec.bump_amplitude >= 0.0)) throw InvalidArgument("bump amplitude must be >= 0");
  if (!(spec.bump_width > 0.0)) throw InvalidArgument("bump width must be > 0");
  if (!(spec.noise_amplitude >= 0.0 && spec.noise_amplitude < 1.0)) {
    throw InvalidArgument("noise amplitude must be in [0, 1)");
  }
  if (spec.bump_amplitude > 0.0 && spec.bump_direction.norm() < 1e-12) {
    throw InvalidArgument("bump direction must be non-zero");
  }
  if (spec.label != 0 && spec.label != 1) throw InvalidArgument("label must be 0 or 1");
}

std::array<double, 3> grid_center(const std::array<int, 3>& dims, const std::array<double, 3>& spacing) {
  return {-0.5 * (dims[0] - 1) * spacing[0], -0.5 * (dims[1] - 1) * spacing[1], -0.5 * (dims[2] - 1) * spacing[2]};
}

}  // namespace

double max_extent(const SyntheticSpec& spec) {
  return (spec.semi_axes.maxCoeff() + spec.bump_amplitude) * (1.0 + spec.noise_amplitude);
}

VoxelGrid generate_synthetic(const SyntheticSpec& spec, std::array<int, 3> dims, std::array<double, 3> spacing) {
  check_spec(spec);
  const double extent = max_extent(spec);
  for (int d = 0; d < 3; ++d) {
    const double half_voxels = 0.5 * (dims[d] - 1) - 2.0;
    if (extent / spacing[d] > half_voxels) {
      throw InvalidArgument("synthetic shape exceeds the grid (needs a 2-voxel margin)");
    }
  }
  // The origin places the shape center at physical (0, 0, 0).
  VoxelGrid grid(dims, spacing, grid_center(dims, spacing));
  const auto ridges = draw_ridges(spec.seed);
  const Vec3 bump_dir = spec.bump_amplitude > 0.0 ? spec.bump_direction.normalized() : Vec3::UnitX();
  const Vec3 inv_axes2 = spec.semi_axes.cwiseProduct(spec.semi_axes).cwiseInverse();
  const double two_w2 = 2.0 * spec.bump_width * spec.bump_width;

  for (int k = 0; k < dims[2]; ++k) {
    for (int j = 0; j < dims[1]; ++j) {
      for (int i = 0; i < dims[0]; ++i) {
        const auto c = grid.center(i, j, k);
        const Vec3 p(c[0], c[1], c[2]);
        const double r = p.norm();
        if (r == 0.0) {
          grid.set(i, j, k, true);
          continue;
        }
        const Vec3 u = p / r;
        const double ellipsoid_radius = 1.0 / std::sqrt(u.cwiseProduct(u).dot(inv_axes2));
        double radius = ellipsoid_radius;
        if (spec.bump_amplitude > 0.0) {
          const double angle = std::acos(std::clamp(u.dot(bump_dir), -1.0, 1.0));
          radius += spec.bump_amplitude * std::exp(-angle * angle / two_w2);
        }
        if (spec.noise_amplitude > 0.0) {
          double noise = 0.0;
          for (const auto& ridge : ridges) {
            noise += ridge.weight * std::cos(ridge.frequency * u.dot(ridge.direction) + ridge.phase);
          }
          radius *= 1.0 + spec.noise_amplitude * noise;
        }
        grid.set(i, j, k, r <= radius);
      }
    }
  }
  return grid;
}

VoxelGrid voxelize_torus(double major_radius, double minor_radius, std::array<int, 3> dims) {
  VoxelGrid grid(dims, {1.0, 1.0, 1.0}, grid_center(dims, {1.0, 1.0, 1.0}));
  for (int k = 0; k < dims[2]; ++k) {
    for (int j = 0; j < dims[1]; ++j) {
      for (int i = 0; i < dims[0]; ++i) {
        const auto c = grid.center(i, j, k);
        const double ring = std::hypot(c[0], c[1]) - major_radius;
        grid.set(i, j, k, ring * ring + c[2] * c[2] <= minor_radius * minor_radius);
      }
    }
  }
  return grid;
}

VoxelGrid voxelize_ball(double radius, std::array<int, 3> dims, std::array<double, 3> spacing) {
  // Centered on voxel dims / 2, so even grids are not perfectly symmetric.
  VoxelGrid grid(dims, spacing,
                 {-(dims[0] / 2) * spacing[0], -(dims[1] / 2) * spacing[1], -(dims[2] / 2) * spacing[2]});
  for (int k = 0; k < dims[2]; ++k) {
    for (int j = 0; j < dims[1]; ++j) {
      for (int i = 0; i < dims[0]; ++i) {
        const auto c = grid.center(i, j, k);
        grid.set(i, j, k, c[0] * c[0] + c[1] * c[1] + c[2] * c[2] <= radius * radius);
      }
    }
  }
  return grid;
}

}  // namespace abdoshape::geometry
