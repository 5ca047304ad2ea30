#pragma once

#include <array>
#include <cstdint>

#include "abdoshape/geometry/tri_mesh.hpp"
#include "abdoshape/geometry/voxel_grid.hpp"

namespace abdoshape::geometry {

/// Parameters of one synthetic organ-like shape.
///
/// The surface is an ellipsoid with semi-axes (a, b, c) whose radius along each
/// direction u is pushed outwards by a Gaussian bump
///     amplitude * exp(-angle(u, bump_direction)^2 / (2 * bump_width^2))
/// and scaled by (1 + noise(u)), where noise is a seeded sum of four
/// low-frequency ridge functions with peak magnitude <= noise_amplitude.
struct SyntheticSpec {
  int label = 0;
  Vec3 semi_axes{10.0, 8.0, 6.0};   // mm
  double bump_amplitude = 0.0;      // mm
  double bump_width = 0.5;          // radians
  Vec3 bump_direction{1.0, 0.0, 0.0};
  double noise_amplitude = 0.0;     // relative radius perturbation
  std::uint64_t seed = 0;
};

/// Rasterizes the shape centered in a grid of `dims` voxels with the given spacing.
/// Throws InvalidArgument if the shape does not fit with a two-voxel margin.
VoxelGrid generate_synthetic(const SyntheticSpec& spec, std::array<int, 3> dims,
                             std::array<double, 3> spacing = {1.0, 1.0, 1.0});

/// Largest possible radius of the shape (mm), used for the fit check.
double max_extent(const SyntheticSpec& spec);

/// Solid torus of the given radii centered in the grid. Test fixture for genus-1 surfaces.
VoxelGrid voxelize_torus(double major_radius, double minor_radius, std::array<int, 3> dims);

/// Solid digital ball: voxels whose centers lie within `radius` of the center of voxel dims / 2.
VoxelGrid voxelize_ball(double radius, std::array<int, 3> dims, std::array<double, 3> spacing = {1.0, 1.0, 1.0});

}  // namespace abdoshape::geometry
