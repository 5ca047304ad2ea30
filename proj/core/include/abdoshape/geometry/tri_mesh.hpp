#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace abdoshape::geometry {

using Vec3 = Eigen::Vector3d;
using Triangle = std::array<int, 3>;

/// Indexed triangle surface in millimeters with outward (counter-clockwise) winding.
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;

  std::size_t vertex_count() const { return vertices.size(); }
  std::size_t triangle_count() const { return triangles.size(); }
};

/// Smallest area a triangle may have and still count as non-degenerate (mm^2).
inline constexpr double kMinTriangleArea = 1e-12;
/// Vertex welding tolerance used by clean_mesh (mm).
inline constexpr double kWeldTolerance = 1e-9;

/// Throws InvalidArgument if an index is out of range or a coordinate is non-finite.
void validate(const TriMesh& mesh);

double triangle_area(const TriMesh& mesh, std::size_t t);
double surface_area(const TriMesh& mesh);

/// Volume enclosed by a closed mesh; positive for outward winding.
double signed_volume(const TriMesh& mesh);

/// V - E + F with E the number of unique undirected edges.
long euler_characteristic(const TriMesh& mesh);

struct ManifoldReport {
  std::size_t boundary_edges = 0;      // used by one triangle
  std::size_t nonmanifold_edges = 0;   // used by three or more
  std::size_t inconsistent_edges = 0;  // two triangles traversing the edge in the same direction
  bool closed_manifold() const {
    return boundary_edges == 0 && nonmanifold_edges == 0 && inconsistent_edges == 0;
  }
};

/// Edge-use statistics; a closed, consistently wound edge-manifold mesh has all counts zero.
ManifoldReport check_manifold(const TriMesh& mesh);

/// Number of connected components of the vertex-triangle graph (isolated vertices count).
int connected_components(const TriMesh& mesh);

/// Welds vertices closer than `weld_tolerance`, drops triangles with area below
/// `min_area` or repeated indices, and removes unreferenced vertices.
TriMesh clean_mesh(const TriMesh& mesh, double weld_tolerance = kWeldTolerance,
                   double min_area = kMinTriangleArea);

TriMesh transformed(const TriMesh& mesh, const Eigen::Isometry3d& motion);
TriMesh scaled(const TriMesh& mesh, double factor);

/// Geodesic sphere: recursively subdivided icosahedron, 20*4^s triangles, vertices on the sphere.
TriMesh icosphere(int subdivisions, double radius = 1.0);

}  // namespace abdoshape::geometry
