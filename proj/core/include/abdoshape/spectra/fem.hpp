#pragma once

#include <Eigen/SparseCore>

#include "abdoshape/geometry/tri_mesh.hpp"

namespace abdoshape::spectra {

using SparseMatrix = Eigen::SparseMatrix<double>;

enum class MassType { kConsistent, kLumped };

/// Linear finite-element discretization of the Laplace-Beltrami operator:
/// stiffness A (cotangent weights, positive semi-definite) and mass B.
/// The eigenproblem A f = lambda B f approximates -Laplace f = lambda f.
struct FemPair {
  SparseMatrix stiffness;
  SparseMatrix mass;

  Eigen::Index size() const { return stiffness.rows(); }
};

/// P1 assembly. Per triangle, A_ij -= cot(angle opposite ij)/2 with the
/// diagonal set to the negated row sum; consistent mass adds T/6 on the
/// diagonal and T/12 off it (lumped mass adds T/3 to the diagonal).
/// Throws NumericalError naming the first degenerate triangle.
FemPair assemble_fem(const geometry::TriMesh& mesh, MassType mass = MassType::kConsistent);

}  // namespace abdoshape::spectra
