#include "abdoshape/spectra/shape_dna.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>

#include "abdoshape/error.hpp"
#include "abdoshape/spectra/fem.hpp"

namespace abdoshape::spectra {
namespace {

// Indices of eigenvalues at or above the zero-mode threshold.
std::vector<Eigen::Index> nonzero_modes(const Eigen::VectorXd& values) {
  const double threshold = kZeroModeRelative * values.maxCoeff();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values[i] >= threshold) keep.push_back(i);
  }
  return keep;
}

std::string format_double(double v) {
  std::ostringstream ss;
  ss << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return ss.str();
}

}  // namespace

double ShapeDna::max_residual() const {
  return residuals.empty() ? 0.0 : *std::max_element(residuals.begin(), residuals.end());
}

std::vector<double> reweight(std::span<const double> eigenvalues) {
  std::vector<double> out(eigenvalues.size());
  for (std::size_t i = 0; i < eigenvalues.size(); ++i) out[i] = eigenvalues[i] / static_cast<double>(i + 1);
  return out;
}

ShapeDna shape_dna(const geometry::TriMesh& mesh, int l, const SolverOptions& options) {
  if (l < 1) throw InvalidArgument("descriptor length must be >= 1");
  const int components = geometry::connected_components(mesh);
  const FemPair fem = assemble_fem(mesh);
  const EigenBasis basis = solve_spectrum(fem, l + components, options);
  const auto keep = nonzero_modes(basis.values);
  if (static_cast<int>(keep.size()) < l) {
    throw NumericalError("only " + std::to_string(keep.size()) + " non-zero eigenvalues available, need " +
                         std::to_string(l));
  }
  ShapeDna dna;
  for (int i = 0; i < l; ++i) {
    dna.eigenvalues.push_back(basis.values[keep[i]]);
    dna.residuals.push_back(basis.residuals[keep[i]]);
  }
  dna.reweighted = reweight(dna.eigenvalues);
  dna.mesh = {mesh.vertices.size(), mesh.triangles.size(), geometry::surface_area(mesh)};
  dna.tol = options.tol;
  return dna;
}

std::vector<double> abdomen_print(const ShapeDna& liver, const ShapeDna& spleen) {
  if (liver.reweighted.size() != spleen.reweighted.size()) {
    throw InvalidArgument("liver and spleen descriptors differ in length (" + std::to_string(liver.reweighted.size()) +
                          " vs " + std::to_string(spleen.reweighted.size()) + ")");
  }
  std::vector<double> out = liver.reweighted;
  out.insert(out.end(), spleen.reweighted.begin(), spleen.reweighted.end());
  return out;
}

std::vector<double> abdomen_print(const ShapeDna& organ) { return organ.reweighted; }

EigenfunctionTable eigenfunction_export(const geometry::TriMesh& mesh, int k, const SolverOptions& options) {
  if (k < 1) throw InvalidArgument("eigenfunction count must be >= 1");
  const int components = geometry::connected_components(mesh);
  const FemPair fem = assemble_fem(mesh);
  const EigenBasis basis = solve_spectrum(fem, k + components, options);
  const auto keep = nonzero_modes(basis.values);
  if (static_cast<int>(keep.size()) < k) throw NumericalError("not enough non-constant eigenfunctions");
  EigenfunctionTable table;
  table.eigenvalues.resize(k);
  table.values.resize(basis.vectors.rows(), k);
  for (int j = 0; j < k; ++j) {
    Eigen::VectorXd f = basis.vectors.col(keep[j]);
    Eigen::Index argmax = 0;
    f.cwiseAbs().maxCoeff(&argmax);
    if (f[argmax] < 0.0) f = -f;
    table.values.col(j) = f;
    table.eigenvalues[j] = basis.values[keep[j]];
  }
  return table;
}

std::string shape_dna_csv(const ShapeDna& dna) {
  std::ostringstream out;
  out << "# V=" << dna.mesh.vertices << ",F=" << dna.mesh.triangles << ",area=" << format_double(dna.mesh.area)
      << ",tol=" << format_double(dna.tol) << ",residual_max=" << format_double(dna.max_residual()) << '\n';
  out << "i,lambda,lambda_hat\n";
  for (std::size_t i = 0; i < dna.eigenvalues.size(); ++i) {
    out << (i + 1) << ',' << format_double(dna.eigenvalues[i]) << ',' << format_double(dna.reweighted[i]) << '\n';
  }
  return out.str();
}

ShapeDna parse_shape_dna_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  ShapeDna dna;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream meta(line.substr(1));
      std::string field;
      while (std::getline(meta, field, ',')) {
        const auto eq = field.find('=');
        if (eq == std::string::npos) continue;
        auto key = field.substr(0, eq);
        key.erase(0, key.find_first_not_of(' '));
        const std::string value = field.substr(eq + 1);
        if (key == "V") dna.mesh.vertices = std::stoull(value);
        if (key == "F") dna.mesh.triangles = std::stoull(value);
        if (key == "area") dna.mesh.area = std::stod(value);
        if (key == "tol") dna.tol = std::stod(value);
      }
      continue;
    }
    if (!header_seen) {
      if (line != "i,lambda,lambda_hat") throw DataError("ShapeDNA CSV: unexpected header '" + line + "'");
      header_seen = true;
      continue;
    }
    std::istringstream row(line);
    std::string idx, lambda, hat;
    if (!std::getline(row, idx, ',') || !std::getline(row, lambda, ',') || !std::getline(row, hat, ',')) {
      throw DataError("ShapeDNA CSV: malformed row '" + line + "'");
    }
    dna.eigenvalues.push_back(std::stod(lambda));
    dna.reweighted.push_back(std::stod(hat));
  }
  if (!header_seen) throw DataError("ShapeDNA CSV: missing header");
  return dna;
}

std::string eigenfunction_csv(const EigenfunctionTable& table) {
  std::ostringstream out;
  out << "vertex";
  for (Eigen::Index j = 0; j < table.values.cols(); ++j) out << ",f" << (j + 1);
  out << '\n';
  for (Eigen::Index i = 0; i < table.values.rows(); ++i) {
    out << i;
    for (Eigen::Index j = 0; j < table.values.cols(); ++j) out << ',' << format_double(table.values(i, j));
    out << '\n';
  }
  return out.str();
}

}  // namespace abdoshape::spectra
