#include <algorithm>
#include <fstream>
#include <sstream>

#include "abdoshape/detail/text.hpp"
#include "abdoshape/error.hpp"
#include "abdoshape/geometry/io.hpp"
#include "abdoshape/geometry/marching_cubes.hpp"
#include "pipeline/model_bundle.hpp"
#include "pipeline/run_record.hpp"

namespace abdoshape::pipeline {

std::string organs_label(const std::vector<mspnet::Organ>& organs) {
  std::string out;
  for (const auto organ : organs) {
    if (!out.empty()) out += '+';
    out += mspnet::organ_name(organ);
  }
  return out;
}

std::vector<mspnet::Organ> parse_organs(const std::string& text) {
  std::vector<mspnet::Organ> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, text.find('+') != std::string::npos ? '+' : ',')) {
    if (item.empty()) continue;
    try {
      const auto organ = mspnet::parse_organ(item);
      for (const auto seen : out) {
        if (seen == organ) throw UsageError("organ '" + item + "' listed twice");
      }
      out.push_back(organ);
    } catch (const InvalidArgument&) {
      throw UsageError("unknown organ '" + item + "' (expected liver or spleen)");
    }
  }
  if (out.empty()) throw UsageError("no organs given");
  return out;
}

std::uint64_t derive_seed(std::uint64_t seed, const std::string& key) {
  const auto hex = sha256_hex(std::to_string(seed) + ":" + key);
  return std::stoull(hex.substr(0, 16), nullptr, 16);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

std::string extension_of(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

geometry::TriMesh load_surface(const std::filesystem::path& path) {
  const auto ext = extension_of(path);
  if (ext == ".vox") return geometry::marching_cubes(geometry::read_voxels(path));
  if (ext == ".off") return geometry::read_off(path);
  throw DataError(path.string() + ": expected a .vox or .off file for a surface");
}

std::string feature_matrix_csv(const FeatureMatrix& matrix) {
  const auto rows = static_cast<Eigen::Index>(matrix.ids.size());
  if (matrix.labels.size() != matrix.ids.size() || matrix.values.rows() != rows ||
      matrix.values.cols() != static_cast<Eigen::Index>(matrix.columns.size())) {
    throw InvalidArgument("feature matrix: inconsistent sizes");
  }
  std::ostringstream out;
  out << "id,label";
  for (const auto& c : matrix.columns) out << ',' << c;
  out << '\n';
  for (Eigen::Index i = 0; i < rows; ++i) {
    out << matrix.ids[i] << ',' << matrix.labels[i];
    for (Eigen::Index j = 0; j < matrix.values.cols(); ++j) out << ',' << detail::format_double(matrix.values(i, j));
    out << '\n';
  }
  return out.str();
}

FeatureMatrix parse_feature_matrix_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError("feature matrix: empty file");
  FeatureMatrix m;
  {
    std::istringstream header(line);
    std::string cell;
    std::getline(header, cell, ',');
    if (cell != "id") throw DataError("feature matrix: header must start with id,label");
    std::getline(header, cell, ',');
    if (cell != "label") throw DataError("feature matrix: header must start with id,label");
    while (std::getline(header, cell, ',')) m.columns.push_back(cell);
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    m.ids.push_back(cell);
    if (!std::getline(row, cell, ',')) throw DataError("feature matrix: short row for " + m.ids.back());
    m.labels.push_back(std::stoi(cell));
    std::vector<double> values;
    while (std::getline(row, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw DataError("feature matrix: bad number '" + cell + "'");
      }
    }
    if (values.size() != m.columns.size()) throw DataError("feature matrix: wrong column count for " + m.ids.back());
    rows.push_back(std::move(values));
  }
  m.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m.columns.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

}  // namespace abdoshape::pipeline
