#include "abdoshape/geometry/voxel_grid.hpp"

#include <algorithm>
#include <string>

#include "abdoshape/error.hpp"

namespace abdoshape::geometry {
namespace {

void check_shape(const std::array<int, 3>& dims, const std::array<double, 3>& spacing) {
  for (int d : dims) {
    if (d < 1) throw InvalidArgument("voxel grid dims must be >= 1");
  }
  for (double s : spacing) {
    if (!(s > 0.0)) throw InvalidArgument("voxel grid spacing must be > 0");
  }
}

}  // namespace

VoxelGrid::VoxelGrid(std::array<int, 3> dims, std::array<double, 3> spacing, std::array<double, 3> origin)
    : dims_(dims), spacing_(spacing), origin_(origin) {
  check_shape(dims, spacing);
  occupancy_.assign(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2], 0);
}

VoxelGrid::VoxelGrid(std::array<int, 3> dims, std::array<double, 3> spacing, std::array<double, 3> origin,
                     std::vector<std::uint8_t> occupancy)
    : dims_(dims), spacing_(spacing), origin_(origin), occupancy_(std::move(occupancy)) {
  check_shape(dims, spacing);
  const auto expected = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  if (occupancy_.size() != expected) {
    throw InvalidArgument("occupancy has " + std::to_string(occupancy_.size()) + " values, expected " +
                          std::to_string(expected));
  }
  for (auto& v : occupancy_) {
    if (v > 1) throw InvalidArgument("occupancy values must be 0 or 1");
  }
}

std::size_t VoxelGrid::occupied_count() const {
  return static_cast<std::size_t>(std::count(occupancy_.begin(), occupancy_.end(), std::uint8_t{1}));
}

}  // namespace abdoshape::geometry
