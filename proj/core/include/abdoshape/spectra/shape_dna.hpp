#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "abdoshape/geometry/tri_mesh.hpp"
#include "abdoshape/spectra/eigensolver.hpp"

namespace abdoshape::spectra {

/// Relative threshold below which an eigenvalue is treated as a zero (constant) mode.
inline constexpr double kZeroModeRelative = 1e-6;
inline constexpr int kDefaultDescriptorLength = 50;

struct MeshSummary {
  std::size_t vertices = 0;
  std::size_t triangles = 0;
  double area = 0.0;
};

/// First l non-zero Laplace-Beltrami eigenvalues and their linear reweighting.
struct ShapeDna {
  std::vector<double> eigenvalues;  // lambda_1..lambda_l, ascending, > 0
  std::vector<double> reweighted;   // lambda_i / i
  std::vector<double> residuals;
  MeshSummary mesh;
  double tol = 0.0;

  std::size_t length() const { return eigenvalues.size(); }
  double max_residual() const;
};

/// lambda_i / i for i = 1..n.
std::vector<double> reweight(std::span<const double> eigenvalues);

/// Solves for l + (component count) pairs and drops the zero modes.
/// Throws NumericalError if fewer than l non-zero eigenvalues remain.
ShapeDna shape_dna(const geometry::TriMesh& mesh, int l, const SolverOptions& options = {});

/// Concatenated reweighted descriptors [liver || spleen]. Throws InvalidArgument on length mismatch.
std::vector<double> abdomen_print(const ShapeDna& liver, const ShapeDna& spleen);
/// Single-organ variant: the reweighted descriptor itself.
std::vector<double> abdomen_print(const ShapeDna& organ);

/// First k non-constant eigenfunctions, B-orthonormal, each column's
/// largest-magnitude entry positive.
struct EigenfunctionTable {
  Eigen::VectorXd eigenvalues;  // k values
  Eigen::MatrixXd values;       // V x k
};

EigenfunctionTable eigenfunction_export(const geometry::TriMesh& mesh, int k, const SolverOptions& options = {});

// CSV: '#' metadata line (V, F, area, tol, residual_max), then "i,lambda,lambda_hat".
std::string shape_dna_csv(const ShapeDna& dna);
ShapeDna parse_shape_dna_csv(const std::string& text);
// CSV: "vertex,f1,...,fk".
std::string eigenfunction_csv(const EigenfunctionTable& table);

}  // namespace abdoshape::spectra
