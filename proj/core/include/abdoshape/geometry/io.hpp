#pragma once

#include <filesystem>
#include <string>

#include "abdoshape/geometry/point_cloud.hpp"
#include "abdoshape/geometry/tri_mesh.hpp"
#include "abdoshape/geometry/voxel_grid.hpp"

namespace abdoshape::geometry {

// VOX1: "VOX1", u32 dims[3], f32 spacing[3], f32 origin[3], nx*ny*nz bytes of 0/1 (x-fastest).
void write_voxels(const std::filesystem::path& path, const VoxelGrid& grid);
VoxelGrid read_voxels(const std::filesystem::path& path);

// ASCII OFF with triangle faces only.
void write_off(const std::filesystem::path& path, const TriMesh& mesh);
TriMesh read_off(const std::filesystem::path& path);

// PCL1: "PCL1", u32 n, 3n f32 values.
void write_cloud(const std::filesystem::path& path, const PointCloud& cloud);
PointCloud read_cloud(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

}  // namespace abdoshape::geometry
