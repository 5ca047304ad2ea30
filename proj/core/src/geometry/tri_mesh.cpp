#include "abdoshape/geometry/tri_mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <unordered_map>
#include <utility>

#include "abdoshape/error.hpp"

namespace abdoshape::geometry {
namespace {

std::uint64_t edge_key(int a, int b) {
  const auto lo = static_cast<std::uint64_t>(std::min(a, b));
  const auto hi = static_cast<std::uint64_t>(std::max(a, b));
  return (hi << 32) | lo;
}

int find_root(std::vector<int>& parent, int x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

}  // namespace

void validate(const TriMesh& mesh) {
  const auto n = static_cast<int>(mesh.vertices.size());
  for (const auto& v : mesh.vertices) {
    if (!v.allFinite()) throw InvalidArgument("mesh vertex has a non-finite coordinate");
  }
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    for (int idx : mesh.triangles[t]) {
      if (idx < 0 || idx >= n) {
        throw InvalidArgument("triangle " + std::to_string(t) + " references vertex " + std::to_string(idx) +
                              " of " + std::to_string(n));
      }
    }
  }
}

double triangle_area(const TriMesh& mesh, std::size_t t) {
  const auto& tri = mesh.triangles[t];
  const Vec3& a = mesh.vertices[tri[0]];
  const Vec3& b = mesh.vertices[tri[1]];
  const Vec3& c = mesh.vertices[tri[2]];
  return 0.5 * (b - a).cross(c - a).norm();
}

double surface_area(const TriMesh& mesh) {
  double total = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) total += triangle_area(mesh, t);
  return total;
}

double signed_volume(const TriMesh& mesh) {
  double six_vol = 0.0;
  for (const auto& tri : mesh.triangles) {
    six_vol += mesh.vertices[tri[0]].dot(mesh.vertices[tri[1]].cross(mesh.vertices[tri[2]]));
  }
  return six_vol / 6.0;
}

long euler_characteristic(const TriMesh& mesh) {
  std::vector<std::uint64_t> edges;
  edges.reserve(mesh.triangles.size() * 3);
  for (const auto& tri : mesh.triangles) {
    for (int e = 0; e < 3; ++e) edges.push_back(edge_key(tri[e], tri[(e + 1) % 3]));
  }
  std::sort(edges.begin(), edges.end());
  const auto unique_edges = std::unique(edges.begin(), edges.end()) - edges.begin();
  return static_cast<long>(mesh.vertices.size()) - static_cast<long>(unique_edges) +
         static_cast<long>(mesh.triangles.size());
}

ManifoldReport check_manifold(const TriMesh& mesh) {
  // Directed half-edges keyed by (from, to); a consistent closed surface uses
  // each directed half-edge once and its reverse once.
  std::unordered_map<std::uint64_t, std::pair<int, int>> uses;  // undirected key -> (forward, backward)
  uses.reserve(mesh.triangles.size() * 3);
  for (const auto& tri : mesh.triangles) {
    for (int e = 0; e < 3; ++e) {
      const int a = tri[e];
      const int b = tri[(e + 1) % 3];
      auto& count = uses[edge_key(a, b)];
      if (a < b) {
        ++count.first;
      } else {
        ++count.second;
      }
    }
  }
  ManifoldReport report;
  for (const auto& [key, count] : uses) {
    const int total = count.first + count.second;
    if (total == 1) {
      ++report.boundary_edges;
    } else if (total > 2) {
      ++report.nonmanifold_edges;
    } else if (count.first != 1) {
      ++report.inconsistent_edges;
    }
  }
  return report;
}

int connected_components(const TriMesh& mesh) {
  std::vector<int> parent(mesh.vertices.size());
  std::iota(parent.begin(), parent.end(), 0);
  for (const auto& tri : mesh.triangles) {
    const int r0 = find_root(parent, tri[0]);
    for (int e = 1; e < 3; ++e) {
      const int r = find_root(parent, tri[e]);
      if (r != r0) parent[r] = r0;
    }
  }
  int count = 0;
  for (std::size_t i = 0; i < parent.size(); ++i) {
    if (find_root(parent, static_cast<int>(i)) == static_cast<int>(i)) ++count;
  }
  return count;
}

TriMesh clean_mesh(const TriMesh& mesh, double weld_tolerance, double min_area) {
  validate(mesh);
  // Weld: bucket vertices on a grid of cell size = tolerance and merge with
  // earlier vertices in the 27 neighbouring cells.
  const double cell = weld_tolerance > 0.0 ? weld_tolerance : 1.0;
  auto cell_of = [cell](const Vec3& p) {
    return std::array<std::int64_t, 3>{static_cast<std::int64_t>(std::floor(p.x() / cell)),
                                       static_cast<std::int64_t>(std::floor(p.y() / cell)),
                                       static_cast<std::int64_t>(std::floor(p.z() / cell))};
  };
  std::map<std::array<std::int64_t, 3>, std::vector<int>> buckets;
  std::vector<int> remap(mesh.vertices.size());
  std::vector<Vec3> welded;
  welded.reserve(mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const Vec3& p = mesh.vertices[i];
    const auto c = cell_of(p);
    int found = -1;
    if (weld_tolerance > 0.0) {
      for (int dx = -1; dx <= 1 && found < 0; ++dx) {
        for (int dy = -1; dy <= 1 && found < 0; ++dy) {
          for (int dz = -1; dz <= 1 && found < 0; ++dz) {
            auto it = buckets.find({c[0] + dx, c[1] + dy, c[2] + dz});
            if (it == buckets.end()) continue;
            for (int w : it->second) {
              if ((welded[w] - p).norm() <= weld_tolerance) {
                found = w;
                break;
              }
            }
          }
        }
      }
    }
    if (found < 0) {
      found = static_cast<int>(welded.size());
      welded.push_back(p);
      buckets[c].push_back(found);
    }
    remap[i] = found;
  }

  TriMesh out;
  std::vector<Triangle> kept;
  kept.reserve(mesh.triangles.size());
  for (const auto& tri : mesh.triangles) {
    const Triangle t{remap[tri[0]], remap[tri[1]], remap[tri[2]]};
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) continue;
    const double area = 0.5 * (welded[t[1]] - welded[t[0]]).cross(welded[t[2]] - welded[t[0]]).norm();
    if (area < min_area) continue;
    kept.push_back(t);
  }
  // Drop vertices no triangle references, keeping first-use order stable.
  std::vector<int> compact(welded.size(), -1);
  for (auto& t : kept) {
    for (int& idx : t) {
      if (compact[idx] < 0) {
        compact[idx] = static_cast<int>(out.vertices.size());
        out.vertices.push_back(welded[idx]);
      }
      idx = compact[idx];
    }
  }
  out.triangles = std::move(kept);
  return out;
}

TriMesh transformed(const TriMesh& mesh, const Eigen::Isometry3d& motion) {
  TriMesh out = mesh;
  for (auto& v : out.vertices) v = motion * v;
  return out;
}

TriMesh scaled(const TriMesh& mesh, double factor) {
  TriMesh out = mesh;
  for (auto& v : out.vertices) v *= factor;
  return out;
}

TriMesh icosphere(int subdivisions, double radius) {
  if (subdivisions < 0 || subdivisions > 7) throw InvalidArgument("icosphere subdivisions must be in [0, 7]");
  if (!(radius > 0.0)) throw InvalidArgument("icosphere radius must be > 0");
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  TriMesh mesh;
  mesh.vertices = {{-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0}, {0, -1, phi}, {0, 1, phi},
                   {0, -1, -phi}, {0, 1, -phi}, {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
  mesh.triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                    {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                    {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (auto& v : mesh.vertices) v.normalize();

  for (int s = 0; s < subdivisions; ++s) {
    std::unordered_map<std::uint64_t, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = edge_key(a, b);
      if (auto it = midpoint.find(key); it != midpoint.end()) return it->second;
      const int idx = static_cast<int>(mesh.vertices.size());
      mesh.vertices.push_back((mesh.vertices[a] + mesh.vertices[b]).normalized());
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<Triangle> next;
    next.reserve(mesh.triangles.size() * 4);
    for (const auto& t : mesh.triangles) {
      const int ab = mid(t[0], t[1]);
      const int bc = mid(t[1], t[2]);
      const int ca = mid(t[2], t[0]);
      next.push_back({t[0], ab, ca});
      next.push_back({t[1], bc, ab});
      next.push_back({t[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    mesh.triangles = std::move(next);
  }
  for (auto& v : mesh.vertices) v = v.normalized() * radius;
  return mesh;
}

}  // namespace abdoshape::geometry
