#include "abdoshape/spectra/fem.hpp"

#include <string>
#include <vector>

#include "abdoshape/error.hpp"

namespace abdoshape::spectra {

FemPair assemble_fem(const geometry::TriMesh& mesh, MassType mass) {
  geometry::validate(mesh);
  const auto n = static_cast<Eigen::Index>(mesh.vertices.size());
  std::vector<Eigen::Triplet<double>> a_entries;
  std::vector<Eigen::Triplet<double>> b_entries;
  a_entries.reserve(mesh.triangles.size() * 12);
  b_entries.reserve(mesh.triangles.size() * 9);

  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const geometry::Vec3& p0 = mesh.vertices[tri[0]];
    const geometry::Vec3& p1 = mesh.vertices[tri[1]];
    const geometry::Vec3& p2 = mesh.vertices[tri[2]];
    const double double_area = (p1 - p0).cross(p2 - p0).norm();
    if (!(0.5 * double_area >= geometry::kMinTriangleArea)) {
      throw NumericalError("degenerate triangle " + std::to_string(t) + " in FEM assembly");
    }
    const double area = 0.5 * double_area;
    const geometry::Vec3* p[3] = {&p0, &p1, &p2};
    for (int corner = 0; corner < 3; ++corner) {
      // Edge (i, j) opposite this corner.
      const int i = tri[(corner + 1) % 3];
      const int j = tri[(corner + 2) % 3];
      const geometry::Vec3 u = *p[(corner + 1) % 3] - *p[corner];
      const geometry::Vec3 v = *p[(corner + 2) % 3] - *p[corner];
      const double half_cot = 0.5 * u.dot(v) / double_area;
      a_entries.emplace_back(i, j, -half_cot);
      a_entries.emplace_back(j, i, -half_cot);
      a_entries.emplace_back(i, i, half_cot);
      a_entries.emplace_back(j, j, half_cot);
    }
    for (int r = 0; r < 3; ++r) {
      if (mass == MassType::kLumped) {
        b_entries.emplace_back(tri[r], tri[r], area / 3.0);
        continue;
      }
      for (int c = 0; c < 3; ++c) {
        b_entries.emplace_back(tri[r], tri[c], r == c ? area / 6.0 : area / 12.0);
      }
    }
  }

  FemPair fem;
  fem.stiffness.resize(n, n);
  fem.mass.resize(n, n);
  fem.stiffness.setFromTriplets(a_entries.begin(), a_entries.end());
  fem.mass.setFromTriplets(b_entries.begin(), b_entries.end());
  fem.stiffness.makeCompressed();
  fem.mass.makeCompressed();
  return fem;
}

}  // namespace abdoshape::spectra
