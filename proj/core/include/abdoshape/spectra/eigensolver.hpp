#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Core>

#include "abdoshape/error.hpp"
#include "abdoshape/spectra/fem.hpp"

namespace abdoshape::spectra {

enum class SolverKind {
  kAutomatic,  // dense for V <= kDenseLimit, shift-invert block Krylov otherwise
  kSparse,
  kDense,
};

inline constexpr Eigen::Index kDenseLimit = 300;

struct SolverOptions {
  double tol = 1e-8;
  SolverKind kind = SolverKind::kAutomatic;
  std::uint64_t seed = 0x5eed;
  int block_size = 0;           // 0: chosen from k
  int max_block_steps = 2000;   // expansion steps before giving up
};

/// k smallest eigenpairs of A v = lambda B v.
struct EigenBasis {
  Eigen::VectorXd values;     // ascending
  Eigen::MatrixXd vectors;    // V x k, B-orthonormal columns
  Eigen::VectorXd residuals;  // ||A v - lambda B v|| / ||B v|| per pair
};

/// Raised when the iteration cap is hit; carries the best residuals reached.
class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, Eigen::VectorXd residuals)
      : NumericalError(what), residuals_(std::move(residuals)) {}
  const Eigen::VectorXd& residuals() const { return residuals_; }

 private:
  Eigen::VectorXd residuals_;
};

/// Smallest k eigenpairs, each with ||A v - lambda B v|| <= tol * ||B v||.
/// Throws InvalidArgument if k >= V and ConvergenceError on non-convergence.
EigenBasis solve_spectrum(const FemPair& fem, int k, const SolverOptions& options = {});

/// Dense generalized symmetric solver (Cholesky reduction of B). Test oracle and small-mesh path.
EigenBasis solve_dense(const FemPair& fem, int k);

}  // namespace abdoshape::spectra
