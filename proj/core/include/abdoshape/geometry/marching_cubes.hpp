#pragma once

#include "abdoshape/geometry/tri_mesh.hpp"
#include "abdoshape/geometry/voxel_grid.hpp"

namespace abdoshape::geometry {

/// Extracts the iso-surface of a binary grid sampled at voxel centers.
///
/// The grid is implicitly padded with one layer of empty voxels, so the result
/// is always closed. Ambiguous cube faces separate the occupied corners, which
/// makes the surface bound the 6-connected foreground; every edge is shared by
/// exactly two triangles. Vertices lie on grid edges at the linear
/// interpolation point, i.e. edge midpoints for 0/1 data. Degenerate triangles
/// are removed afterwards (see clean_mesh).
///
/// Throws EmptySurfaceError if no voxel is occupied, InvalidArgument if iso is
/// outside (0, 1) and InternalError if the result is not a closed manifold.
TriMesh marching_cubes(const VoxelGrid& grid, double iso = 0.5);

}  // namespace abdoshape::geometry
