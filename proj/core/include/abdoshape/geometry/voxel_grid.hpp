#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace abdoshape::geometry {

/// Binary occupancy volume with physical spacing (mm per voxel), x-fastest layout.
class VoxelGrid {
 public:
  VoxelGrid() = default;
  /// All-empty grid. Throws InvalidArgument on non-positive dims or spacing.
  VoxelGrid(std::array<int, 3> dims, std::array<double, 3> spacing = {1.0, 1.0, 1.0},
            std::array<double, 3> origin = {0.0, 0.0, 0.0});
  VoxelGrid(std::array<int, 3> dims, std::array<double, 3> spacing, std::array<double, 3> origin,
            std::vector<std::uint8_t> occupancy);

  const std::array<int, 3>& dims() const { return dims_; }
  const std::array<double, 3>& spacing() const { return spacing_; }
  const std::array<double, 3>& origin() const { return origin_; }
  const std::vector<std::uint8_t>& occupancy() const { return occupancy_; }

  std::size_t size() const { return occupancy_.size(); }
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(dims_[0]) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims_[1]) * static_cast<std::size_t>(k));
  }
  bool at(int i, int j, int k) const { return occupancy_[index(i, j, k)] != 0; }
  void set(int i, int j, int k, bool value) { occupancy_[index(i, j, k)] = value ? 1 : 0; }

  /// Voxel-center position in mm.
  std::array<double, 3> center(int i, int j, int k) const {
    return {origin_[0] + spacing_[0] * i, origin_[1] + spacing_[1] * j, origin_[2] + spacing_[2] * k};
  }

  std::size_t occupied_count() const;

  friend bool operator==(const VoxelGrid&, const VoxelGrid&) = default;

 private:
  std::array<int, 3> dims_{1, 1, 1};
  std::array<double, 3> spacing_{1.0, 1.0, 1.0};
  std::array<double, 3> origin_{0.0, 0.0, 0.0};
  std::vector<std::uint8_t> occupancy_ = std::vector<std::uint8_t>(1, 0);
};

}  // namespace abdoshape::geometry
