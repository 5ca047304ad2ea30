#include "abdoshape/geometry/marching_cubes.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "abdoshape/error.hpp"

namespace abdoshape::geometry {
namespace {

// Usual corner numbering: 0 (0,0,0) 1 (1,0,0) 2 (1,1,0) 3 (0,1,0) 4 (0,0,1) 5 (1,0,1) 6 (1,1,1) 7 (0,1,1).
constexpr std::array<std::array<int, 3>, 8> kCorner = {{
    {0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}, {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1},
}};

constexpr std::array<std::array<int, 2>, 12> kEdge = {{
    {0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6}, {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7},
}};

// Faces as corner quadruples; orientation is fixed up in build_table() so that
// each is counter-clockwise seen from outside the cube.
constexpr std::array<std::array<int, 4>, 6> kFace = {{
    {0, 1, 2, 3}, {4, 5, 6, 7}, {0, 1, 5, 4}, {3, 2, 6, 7}, {0, 3, 7, 4}, {1, 2, 6, 5},
}};

using EdgeTriangle = std::array<int, 3>;
using CaseTable = std::array<std::vector<EdgeTriangle>, 256>;

int edge_between(int a, int b) {
  for (int e = 0; e < 12; ++e) {
    if ((kEdge[e][0] == a && kEdge[e][1] == b) || (kEdge[e][0] == b && kEdge[e][1] == a)) return e;
  }
  return -1;
}

std::array<std::array<int, 4>, 6> outward_faces() {
  auto faces = kFace;
  for (auto& f : faces) {
    std::array<double, 3> p[4];
    for (int i = 0; i < 4; ++i) {
      for (int d = 0; d < 3; ++d) p[i][d] = kCorner[f[i]][d];
    }
    const double u[3] = {p[1][0] - p[0][0], p[1][1] - p[0][1], p[1][2] - p[0][2]};
    const double v[3] = {p[2][0] - p[1][0], p[2][1] - p[1][1], p[2][2] - p[1][2]};
    const double n[3] = {u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]};
    double outward = 0.0;
    for (int d = 0; d < 3; ++d) {
      const double center = 0.25 * (p[0][d] + p[1][d] + p[2][d] + p[3][d]);
      outward += n[d] * (center - 0.5);
    }
    if (outward < 0.0) std::swap(f[1], f[3]);
  }
  return faces;
}

// Two cube edges lying on a common face.
bool share_face(int a, int b) {
  for (const auto& f : kFace) {
    int hits = 0;
    for (int i = 0; i < 4; ++i) {
      const int e = edge_between(f[i], f[(i + 1) % 4]);
      hits += (e == a || e == b) ? 1 : 0;
    }
    if (hits == 2) return true;
  }
  return false;
}

// Triangulates a loop without chords between vertices on a common cube face:
// such a chord could be produced again by the neighbouring cube, giving an
// edge with four triangles. Sub-polygon search, lowest split vertex first.
bool triangulate(const std::vector<int>& loop, std::vector<EdgeTriangle>& out) {
  const int n = static_cast<int>(loop.size());
  auto allowed = [&](int i, int j) { return j - i == 1 || (i == 0 && j == n - 1) || !share_face(loop[i], loop[j]); };
  // split[i][j]: chosen apex for the sub-polygon i..j, -1 if impossible, -2 if unknown.
  std::vector<std::vector<int>> split(n, std::vector<int>(n, -2));
  auto solve = [&](auto&& self, int i, int j) -> bool {
    if (j - i < 2) return true;
    if (split[i][j] != -2) return split[i][j] >= 0;
    split[i][j] = -1;
    for (int k = i + 1; k < j; ++k) {
      if (allowed(i, k) && allowed(k, j) && self(self, i, k) && self(self, k, j)) {
        split[i][j] = k;
        return true;
      }
    }
    return false;
  };
  if (!solve(solve, 0, n - 1)) return false;
  auto emit = [&](auto&& self, int i, int j) -> void {
    if (j - i < 2) return;
    const int k = split[i][j];
    out.push_back({loop[i], loop[j], loop[k]});  // loops run clockwise from outside
    self(self, i, k);
    self(self, k, j);
  };
  emit(emit, 0, n - 1);
  return true;
}

// For every corner configuration, walk each face counter-clockwise and emit a
// directed segment from the exit edge to the entry edge of every run of inside
// corners. On faces with two diagonal inside corners each corner is its own run
// (the corners are separated). Each crossing edge then has exactly one incoming
// and one outgoing segment, so the segments form closed loops.
CaseTable build_table() {
  const auto faces = outward_faces();
  CaseTable table;
  for (int config = 0; config < 256; ++config) {
    auto inside = [config](int corner) { return ((config >> corner) & 1) != 0; };
    std::array<int, 12> next;
    next.fill(-1);
    for (const auto& f : faces) {
      for (int i = 0; i < 4; ++i) {
        const int here = f[i];
        if (!inside(here)) continue;
        // Run start: previous corner outside (diagonal inside corners are never adjacent).
        const int prev = f[(i + 3) % 4];
        if (inside(prev)) continue;
        int j = i;
        while (inside(f[(j + 1) % 4])) j = (j + 1) % 4;
        const int entry = edge_between(prev, here);
        const int exit = edge_between(f[j], f[(j + 1) % 4]);
        next[exit] = entry;
      }
    }
    std::array<bool, 12> visited{};
    for (int start = 0; start < 12; ++start) {
      if (next[start] < 0 || visited[start]) continue;
      std::vector<int> loop;
      for (int e = start; !visited[e]; e = next[e]) {
        visited[e] = true;
        loop.push_back(e);
      }
      if (!triangulate(loop, table[config])) {
        throw InternalError("marching cubes table: no face-safe triangulation for case " + std::to_string(config));
      }
    }
  }
  return table;
}

const CaseTable& case_table() {
  static const CaseTable table = build_table();
  return table;
}

}  // namespace

TriMesh marching_cubes(const VoxelGrid& grid, double iso) {
  if (!(iso > 0.0 && iso < 1.0)) throw InvalidArgument("iso value must be in (0, 1)");
  if (grid.occupied_count() == 0) throw EmptySurfaceError();

  const auto& dims = grid.dims();
  const auto& spacing = grid.spacing();
  const auto& origin = grid.origin();
  // Padded sample lattice: indices -1..n map to 0..n+1.
  const int px = dims[0] + 2;
  const int py = dims[1] + 2;
  const int pz = dims[2] + 2;
  auto sample = [&](int i, int j, int k) -> double {
    if (i < 0 || j < 0 || k < 0 || i >= dims[0] || j >= dims[1] || k >= dims[2]) return 0.0;
    return grid.at(i, j, k) ? 1.0 : 0.0;
  };
  auto lattice_id = [&](int i, int j, int k) -> std::int64_t {
    return (static_cast<std::int64_t>(i) + 1) +
           static_cast<std::int64_t>(px) * ((static_cast<std::int64_t>(j) + 1) +
                                            static_cast<std::int64_t>(py) * (static_cast<std::int64_t>(k) + 1));
  };

  const auto& table = case_table();
  TriMesh mesh;
  std::unordered_map<std::int64_t, int> edge_vertex;

  auto vertex_on_edge = [&](int ci, int cj, int ck, int edge) {
    auto a = kCorner[kEdge[edge][0]];
    auto b = kCorner[kEdge[edge][1]];
    if (a[0] + a[1] + a[2] > b[0] + b[1] + b[2]) std::swap(a, b);
    const int ai = ci + a[0], aj = cj + a[1], ak = ck + a[2];
    const int axis = b[0] != a[0] ? 0 : (b[1] != a[1] ? 1 : 2);
    const std::int64_t key = lattice_id(ai, aj, ak) * 3 + axis;
    if (auto it = edge_vertex.find(key); it != edge_vertex.end()) return it->second;
    const double va = sample(ai, aj, ak);
    const double vb = sample(ci + b[0], cj + b[1], ck + b[2]);
    const double t = (iso - va) / (vb - va);
    double pos[3] = {static_cast<double>(ai), static_cast<double>(aj), static_cast<double>(ak)};
    pos[axis] += t;
    const int idx = static_cast<int>(mesh.vertices.size());
    mesh.vertices.emplace_back(origin[0] + spacing[0] * pos[0], origin[1] + spacing[1] * pos[1],
                               origin[2] + spacing[2] * pos[2]);
    edge_vertex.emplace(key, idx);
    return idx;
  };

  for (int ck = -1; ck < pz - 2; ++ck) {
    for (int cj = -1; cj < py - 2; ++cj) {
      for (int ci = -1; ci < px - 2; ++ci) {
        int config = 0;
        for (int c = 0; c < 8; ++c) {
          if (sample(ci + kCorner[c][0], cj + kCorner[c][1], ck + kCorner[c][2]) > iso) config |= 1 << c;
        }
        for (const auto& tri : table[config]) {
          mesh.triangles.push_back({vertex_on_edge(ci, cj, ck, tri[0]), vertex_on_edge(ci, cj, ck, tri[1]),
                                    vertex_on_edge(ci, cj, ck, tri[2])});
        }
      }
    }
  }

  TriMesh cleaned = clean_mesh(mesh);
  const auto report = check_manifold(cleaned);
  if (!report.closed_manifold()) {
    throw InternalError("marching cubes produced a non-manifold surface (" + std::to_string(report.boundary_edges) +
                        " boundary, " + std::to_string(report.nonmanifold_edges) + " non-manifold, " +
                        std::to_string(report.inconsistent_edges) + " inconsistent edges)");
  }
  return cleaned;
}

}  // namespace abdoshape::geometry
