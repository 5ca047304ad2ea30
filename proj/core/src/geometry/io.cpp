#include "abdoshape/geometry/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>

#include "abdoshape/detail/binary.hpp"
#include "abdoshape/error.hpp"

namespace abdoshape::geometry {
namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_voxels(const std::filesystem::path& path, const VoxelGrid& grid) {
  detail::ByteWriter w;
  w.raw("VOX1");
  for (int d : grid.dims()) w.put(static_cast<std::uint32_t>(d));
  for (double s : grid.spacing()) w.put(static_cast<float>(s));
  for (double o : grid.origin()) w.put(static_cast<float>(o));
  const auto& occ = grid.occupancy();
  w.raw(std::string_view(reinterpret_cast<const char*>(occ.data()), occ.size()));
  write_file_atomic(path, w.take());
}

VoxelGrid read_voxels(const std::filesystem::path& path) {
  const std::string data = slurp(path);
  detail::ByteReader r(data, path.string());
  if (r.raw(4) != "VOX1") throw DataError(path.string() + ": bad magic, expected VOX1");
  std::array<int, 3> dims{};
  std::array<double, 3> spacing{};
  std::array<double, 3> origin{};
  for (auto& d : dims) {
    const auto v = r.get<std::uint32_t>();
    if (v == 0 || v > (1u << 16)) throw DataError(path.string() + ": implausible dimension");
    d = static_cast<int>(v);
  }
  for (auto& s : spacing) s = r.get<float>();
  for (auto& o : origin) o = r.get<float>();
  const auto count = static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  const auto bytes = r.raw(count);
  if (r.remaining() != 0) throw DataError(path.string() + ": trailing bytes after occupancy");
  std::vector<std::uint8_t> occ(bytes.begin(), bytes.end());
  try {
    return VoxelGrid(dims, spacing, origin, std::move(occ));
  } catch (const InvalidArgument& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_off(const std::filesystem::path& path, const TriMesh& mesh) {
  std::ostringstream out;
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "OFF\n" << mesh.vertices.size() << ' ' << mesh.triangles.size() << " 0\n";
  for (const auto& v : mesh.vertices) out << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& t : mesh.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  write_file_atomic(path, out.str());
}

TriMesh read_off(const std::filesystem::path& path) {
  std::istringstream in(slurp(path));
  std::string header;
  in >> header;
  if (header != "OFF") throw DataError(path.string() + ": missing OFF header");
  std::size_t nv = 0, nf = 0, ne = 0;
  if (!(in >> nv >> nf >> ne)) throw DataError(path.string() + ": bad counts line");
  TriMesh mesh;
  mesh.vertices.resize(nv);
  for (auto& v : mesh.vertices) {
    if (!(in >> v.x() >> v.y() >> v.z())) throw DataError(path.string() + ": bad vertex line");
  }
  mesh.triangles.resize(nf);
  for (auto& t : mesh.triangles) {
    int arity = 0;
    if (!(in >> arity) || arity != 3) throw DataError(path.string() + ": only triangle faces are supported");
    if (!(in >> t[0] >> t[1] >> t[2])) throw DataError(path.string() + ": bad face line");
  }
  try {
    validate(mesh);
  } catch (const InvalidArgument& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return mesh;
}

void write_cloud(const std::filesystem::path& path, const PointCloud& cloud) {
  detail::ByteWriter w;
  w.raw("PCL1");
  w.put(static_cast<std::uint32_t>(cloud.size()));
  for (Eigen::Index i = 0; i < cloud.points.rows(); ++i) {
    for (int d = 0; d < 3; ++d) w.put(static_cast<float>(cloud.points(i, d)));
  }
  write_file_atomic(path, w.take());
}

PointCloud read_cloud(const std::filesystem::path& path) {
  const std::string data = slurp(path);
  detail::ByteReader r(data, path.string());
  if (r.raw(4) != "PCL1") throw DataError(path.string() + ": bad magic, expected PCL1");
  const auto n = r.get<std::uint32_t>();
  if (r.remaining() != static_cast<std::size_t>(n) * 12) throw DataError(path.string() + ": size mismatch");
  PointCloud cloud;
  cloud.points.resize(n, 3);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (int d = 0; d < 3; ++d) {
      const double v = r.get<float>();
      if (!std::isfinite(v)) throw DataError(path.string() + ": non-finite coordinate");
      cloud.points(i, d) = v;
    }
  }
  return cloud;
}

}  // namespace abdoshape::geometry
