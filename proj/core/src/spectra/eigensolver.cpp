#include "abdoshape/spectra/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include "abdoshape/random.hpp"

namespace abdoshape::spectra {
namespace {

void check_request(const FemPair& fem, int k, bool dense) {
  const Eigen::Index n = fem.size();
  if (fem.mass.rows() != n || fem.stiffness.cols() != n || fem.mass.cols() != n) {
    throw InvalidArgument("stiffness and mass matrices must be square and of equal size");
  }
  if (k < 1) throw InvalidArgument("number of eigenpairs must be >= 1");
  if (dense ? k > n : k >= n) {
    throw InvalidArgument("mesh with " + std::to_string(n) + " vertices is too small for " + std::to_string(k) +
                          " eigenpairs");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(fem.mass.coeff(i, i) > 0.0)) {
      throw NumericalError("mass matrix is not positive definite (vertex " + std::to_string(i) +
                           " has no incident triangle)");
    }
  }
}

Eigen::VectorXd relative_residuals(const FemPair& fem, const Eigen::VectorXd& values, const Eigen::MatrixXd& vectors) {
  const Eigen::MatrixXd bx = fem.mass * vectors;
  const Eigen::MatrixXd r = fem.stiffness * vectors - bx * values.asDiagonal();
  Eigen::VectorXd out(values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) out[i] = r.col(i).norm() / bx.col(i).norm();
  return out;
}

// Growing B-orthonormal basis Q with cached B*Q and A*Q.
class Subspace {
 public:
  Subspace(const FemPair& fem, Eigen::Index capacity) : fem_(fem) {
    const Eigen::Index n = fem.size();
    q_.resize(n, capacity);
    bq_.resize(n, capacity);
    aq_.resize(n, capacity);
  }

  Eigen::Index size() const { return m_; }

  auto basis() const { return q_.leftCols(m_); }
  auto mass_basis() const { return bq_.leftCols(m_); }
  auto stiffness_basis() const { return aq_.leftCols(m_); }

  /// B-orthogonalizes the columns of `block` against the basis and each other
  /// and appends the survivors. Returns how many columns were added.
  Eigen::Index append(Eigen::MatrixXd block) {
    const Eigen::Index start = m_;
    for (Eigen::Index j = 0; j < block.cols() && m_ < q_.cols(); ++j) {
      Eigen::VectorXd w = block.col(j);
      Eigen::VectorXd bw = fem_.mass * w;
      const double initial = std::sqrt(std::max(w.dot(bw), 0.0));
      if (!(initial > 0.0)) continue;
      for (int pass = 0; pass < 2; ++pass) {
        if (m_ > 0) {
          const Eigen::VectorXd coeff = bq_.leftCols(m_).transpose() * w;
          w.noalias() -= q_.leftCols(m_) * coeff;
        }
        bw = fem_.mass * w;
      }
      const double norm = std::sqrt(std::max(w.dot(bw), 0.0));
      if (!(norm > 1e-10 * initial)) continue;
      q_.col(m_) = w / norm;
      bq_.col(m_) = bw / norm;
      ++m_;
    }
    if (m_ > start) aq_.middleCols(start, m_ - start) = fem_.stiffness * q_.middleCols(start, m_ - start);
    return m_ - start;
  }

  /// Replaces the basis by Q * coeffs (coeffs orthonormal, so B-orthonormality is kept).
  void rotate(const Eigen::MatrixXd& coeffs) {
    const Eigen::Index keep = coeffs.cols();
    Eigen::MatrixXd q = basis() * coeffs;
    Eigen::MatrixXd bq = mass_basis() * coeffs;
    Eigen::MatrixXd aq = stiffness_basis() * coeffs;
    q_.leftCols(keep) = q;
    bq_.leftCols(keep) = bq;
    aq_.leftCols(keep) = aq;
    m_ = keep;
  }

 private:
  const FemPair& fem_;
  Eigen::MatrixXd q_;
  Eigen::MatrixXd bq_;
  Eigen::MatrixXd aq_;
  Eigen::Index m_ = 0;
};

Eigen::MatrixXd random_block(Eigen::Index n, Eigen::Index cols, Rng& rng) {
  Eigen::MatrixXd block(n, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) block(i, j) = rng.normal();
  }
  return block;
}

// Shift-invert block Krylov iteration with Rayleigh-Ritz extraction in the
// stiffness matrix. The operator (A - sigma B)^{-1} B maps the smallest
// eigenvalues to the dominant ones; sigma < 0 keeps the shifted matrix
// positive definite even though A is singular.
EigenBasis solve_sparse(const FemPair& fem, int k, const SolverOptions& options) {
  const Eigen::Index n = fem.size();
  const double area = fem.mass.sum();
  // For a closed genus-0 surface lambda_1 <= 8 pi / area; sigma sits well below that.
  const double sigma = -0.1 * 4.0 * std::numbers::pi / area;
  const SparseMatrix shifted = fem.stiffness - sigma * fem.mass;
  Eigen::SimplicialLDLT<SparseMatrix> factor(shifted);
  if (factor.info() != Eigen::Success) throw NumericalError("factorization of the shifted stiffness matrix failed");

  const Eigen::Index block =
      options.block_size > 0 ? options.block_size : std::clamp<Eigen::Index>(k / 3 + 2, 6, 24);
  const Eigen::Index capacity = std::min<Eigen::Index>(n, std::max<Eigen::Index>(k + 4 * block, 3 * k));
  const Eigen::Index keep_on_restart = std::min<Eigen::Index>(capacity - 1, k + block);

  auto apply_operator = [&](const Eigen::MatrixXd& x) {
    Eigen::MatrixXd y = factor.solve(fem.mass * x);
    if (factor.info() != Eigen::Success) throw NumericalError("shift-invert solve failed");
    return y;
  };

  Rng rng(options.seed);
  Subspace space(fem, capacity);
  Eigen::MatrixXd next = apply_operator(random_block(n, std::min(block, capacity), rng));
  Eigen::VectorXd best_residuals = Eigen::VectorXd::Constant(k, std::numeric_limits<double>::infinity());

  for (int step = 0; step < options.max_block_steps; ++step) {
    const Eigen::Index before = space.size();
    const Eigen::Index added = space.append(next);
    if (added == 0 && space.size() < capacity) {
      // The Krylov sequence stalled; continue from fresh random directions.
      next = apply_operator(random_block(n, block, rng));
      continue;
    }
    if (space.size() < std::min<Eigen::Index>(capacity, k + block) && space.size() < n) {
      next = apply_operator(space.basis().middleCols(before, added));
      continue;
    }

    Eigen::MatrixXd projected = space.basis().transpose() * space.stiffness_basis();
    projected = 0.5 * (projected + projected.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(projected);
    if (ritz.info() != Eigen::Success) throw NumericalError("Rayleigh-Ritz eigensolve failed");
    const Eigen::VectorXd theta = ritz.eigenvalues().head(k);
    const Eigen::MatrixXd coeffs = ritz.eigenvectors().leftCols(k);
    const Eigen::MatrixXd x = space.basis() * coeffs;
    const Eigen::MatrixXd bx = space.mass_basis() * coeffs;
    const Eigen::MatrixXd ax = space.stiffness_basis() * coeffs;

    // Tighten the criterion for small eigenvalues so it is scale-covariant;
    // it never exceeds the contractual tol * ||Bv||.
    const double scale = std::clamp(theta.cwiseAbs().maxCoeff(), 1e-300, 1.0);
    Eigen::VectorXd residuals(k);
    std::vector<Eigen::Index> unconverged;
    for (Eigen::Index i = 0; i < k; ++i) {
      const double bnorm = bx.col(i).norm();
      const double r = (ax.col(i) - theta[i] * bx.col(i)).norm();
      residuals[i] = r / bnorm;
      if (!(r <= options.tol * scale * bnorm)) unconverged.push_back(i);
    }
    best_residuals = best_residuals.cwiseMin(residuals);

    if (unconverged.empty() || space.size() == n) {
      if (!unconverged.empty() && residuals.maxCoeff() > options.tol) {
        throw ConvergenceError("eigensolver exhausted the full space without meeting the tolerance",
                               best_residuals);
      }
      EigenBasis out;
      out.values = theta;
      out.vectors = x;
      out.residuals = residuals;
      return out;
    }

    if (space.size() + block > capacity) {
      const Eigen::Index keep = std::min<Eigen::Index>(keep_on_restart, space.size());
      space.rotate(ritz.eigenvectors().leftCols(keep));
      Eigen::MatrixXd seeds(n, std::min<Eigen::Index>(block, static_cast<Eigen::Index>(unconverged.size())));
      for (Eigen::Index j = 0; j < seeds.cols(); ++j) seeds.col(j) = x.col(unconverged[j]);
      next = apply_operator(seeds);
    } else {
      next = apply_operator(space.basis().middleCols(before, added));
    }
  }
  throw ConvergenceError("eigensolver did not converge within " + std::to_string(options.max_block_steps) +
                             " block steps (max residual " + std::to_string(best_residuals.maxCoeff()) + ")",
                         best_residuals);
}

}  // namespace

EigenBasis solve_dense(const FemPair& fem, int k) {
  check_request(fem, k, /*dense=*/true);
  const Eigen::MatrixXd a(fem.stiffness);
  const Eigen::MatrixXd b(fem.mass);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, b, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (solver.info() != Eigen::Success) throw NumericalError("dense generalized eigensolve failed");
  EigenBasis out;
  out.values = solver.eigenvalues().head(k);
  out.vectors = solver.eigenvectors().leftCols(k);
  out.residuals = relative_residuals(fem, out.values, out.vectors);
  return out;
}

EigenBasis solve_spectrum(const FemPair& fem, int k, const SolverOptions& options) {
  if (!(options.tol > 0.0)) throw InvalidArgument("eigensolver tolerance must be > 0");
  const bool dense = options.kind == SolverKind::kDense ||
                     (options.kind == SolverKind::kAutomatic && fem.size() <= kDenseLimit);
  check_request(fem, k, /*dense=*/false);
  if (dense) return solve_dense(fem, k);
  return solve_sparse(fem, k, options);
}

}  // namespace abdoshape::spectra
