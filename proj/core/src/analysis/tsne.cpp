#include "abdoshape/analysis/tsne.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "abdoshape/error.hpp"
#include "abdoshape/random.hpp"

namespace abdoshape::analysis {

namespace {

constexpr double kEntropyTolerance = 1e-4;
constexpr int kBisectionSteps = 200;
constexpr double kFloor = 1e-12;

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& x) {
  const Eigen::VectorXd norms = x.rowwise().squaredNorm();
  Eigen::MatrixXd d = (-2.0 * x * x.transpose()).colwise() + norms;
  d.rowwise() += norms.transpose();
  d = d.cwiseMax(0.0);
  d.diagonal().setZero();
  return d;
}

double kl(const Eigen::MatrixXd& p, const Eigen::MatrixXd& q) {
  double sum = 0.0;
  for (Eigen::Index j = 0; j < p.cols(); ++j) {
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
      if (i != j && p(i, j) > 0.0) sum += p(i, j) * std::log(p(i, j) / q(i, j));
    }
  }
  return sum;
}

// Student-t kernel 1 / (1 + d^2) with zero diagonal, and Q = kernel / sum.
void student_t(const Eigen::MatrixXd& y, Eigen::MatrixXd& kernel, Eigen::MatrixXd& q) {
  kernel = (1.0 + squared_distances(y).array()).inverse().matrix();
  kernel.diagonal().setZero();
  q = (kernel / kernel.sum()).cwiseMax(kFloor);
}

}  // namespace

Eigen::MatrixXd conditional_affinities(const Eigen::MatrixXd& features, double perplexity) {
  const Eigen::Index m = features.rows();
  const Eigen::MatrixXd d = squared_distances(features);
  const double target = std::log(perplexity);
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd row(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    double beta = 1.0;
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    // Shifting by the nearest distance keeps exp() away from underflow.
    double dmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < m; ++j) {
      if (j != i) dmin = std::min(dmin, d(i, j));
    }
    bool converged = false;
    for (int step = 0; step < kBisectionSteps; ++step) {
      double sum = 0.0;
      double weighted = 0.0;
      for (Eigen::Index j = 0; j < m; ++j) {
        row[j] = j == i ? 0.0 : std::exp(-beta * (d(i, j) - dmin));
        sum += row[j];
        weighted += row[j] * (d(i, j) - dmin);
      }
      const double entropy = std::log(sum) + beta * weighted / sum;
      row /= sum;
      if (std::abs(entropy - target) <= kEntropyTolerance) {
        converged = true;
        break;
      }
      if (entropy > target) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
      } else {
        hi = beta;
        beta = 0.5 * (beta + lo);
      }
    }
    if (!converged) {
      throw NumericalError("t-SNE bandwidth search did not reach perplexity " + std::to_string(perplexity) +
                           " for row " + std::to_string(i));
    }
    p.row(i) = row.transpose();
  }
  return p;
}

Eigen::MatrixXd joint_affinities(const Eigen::MatrixXd& features, double perplexity) {
  const Eigen::MatrixXd conditional = conditional_affinities(features, perplexity);
  const auto m = static_cast<double>(features.rows());
  Eigen::MatrixXd p = ((conditional + conditional.transpose()) / (2.0 * m)).cwiseMax(kFloor);
  p.diagonal().setZero();
  return p;
}

Embedding2D tsne(const Eigen::MatrixXd& features, const TsneConfig& config) {
  const Eigen::Index m = features.rows();
  if (features.cols() < 1) throw InvalidArgument("t-SNE needs at least one feature column");
  if (!(config.perplexity > 0.0) || static_cast<double>(m) < 3.0 * config.perplexity) {
    throw InvalidArgument("t-SNE perplexity " + std::to_string(config.perplexity) + " is infeasible for " +
                          std::to_string(m) + " rows (need rows >= 3 * perplexity)");
  }
  if (!features.allFinite()) throw InvalidArgument("t-SNE features contain non-finite values");
  if (config.iterations < 1 || config.exaggeration_iterations < 0) {
    throw InvalidArgument("t-SNE iteration counts must be positive");
  }

  const Eigen::MatrixXd p = joint_affinities(features, config.perplexity);

  Rng rng(config.seed);
  Eigen::MatrixX2d y(m, 2);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (int c = 0; c < 2; ++c) y(i, c) = 1e-4 * rng.normal();
  }
  Eigen::MatrixX2d velocity = Eigen::MatrixX2d::Zero(m, 2);
  Eigen::MatrixX2d gains = Eigen::MatrixX2d::Ones(m, 2);
  Eigen::MatrixXd kernel;
  Eigen::MatrixXd q;

  Embedding2D out;
  out.perplexity = config.perplexity;
  out.iterations = config.iterations;
  out.seed = config.seed;
  for (int it = 0; it < config.iterations; ++it) {
    const bool exaggerated = it < config.exaggeration_iterations;
    const double factor = exaggerated ? config.early_exaggeration : 1.0;
    const double momentum = exaggerated ? 0.5 : 0.8;
    student_t(y, kernel, q);
    const Eigen::MatrixXd w = ((factor * p - q).array() * kernel.array()).matrix();
    // dC/dy_i = 4 sum_j w_ij (y_i - y_j)
    const Eigen::MatrixX2d grad = 4.0 * (w.rowwise().sum().asDiagonal() * y - w * y);
    for (Eigen::Index i = 0; i < m; ++i) {
      for (int c = 0; c < 2; ++c) {
        const bool same_sign = (grad(i, c) > 0.0) == (velocity(i, c) > 0.0);
        gains(i, c) = std::max(0.01, same_sign ? gains(i, c) * 0.8 : gains(i, c) + 0.2);
      }
    }
    velocity = momentum * velocity - config.learning_rate * gains.cwiseProduct(grad);
    y += velocity;
    const Eigen::RowVector2d mean = y.colwise().mean();
    y.rowwise() -= mean;
    if (!y.allFinite()) throw NumericalError("t-SNE diverged at iteration " + std::to_string(it + 1));
    if (it + 1 == config.exaggeration_iterations) {
      student_t(y, kernel, q);
      out.kl_after_exaggeration = kl(p, q);
    }
  }
  student_t(y, kernel, q);
  out.kl_divergence = kl(p, q);
  out.coordinates = y;
  return out;
}

double silhouette(const Eigen::MatrixXd& points, std::span<const int> labels) {
  const Eigen::Index m = points.rows();
  if (static_cast<std::size_t>(m) != labels.size()) throw InvalidArgument("silhouette: point and label counts differ");
  std::map<int, std::size_t> sizes;
  for (int l : labels) ++sizes[l];
  if (sizes.size() < 2) throw InvalidArgument("silhouette needs at least two clusters");
  const Eigen::MatrixXd d = squared_distances(points).cwiseSqrt();
  double total = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const int own = labels[static_cast<std::size_t>(i)];
    if (sizes[own] < 2) continue;
    std::map<int, double> sums;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (j != i) sums[labels[static_cast<std::size_t>(j)]] += d(i, j);
    }
    const double a = sums[own] / static_cast<double>(sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (const auto& [label, sum] : sums) {
      if (label != own) b = std::min(b, sum / static_cast<double>(sizes[label]));
    }
    const double denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return total / static_cast<double>(m);
}

}  // namespace abdoshape::analysis
