#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace abdoshape::analysis {

struct TsneConfig {
  double perplexity = 30.0;
  int iterations = 1000;
  double learning_rate = 200.0;
  double early_exaggeration = 12.0;
  int exaggeration_iterations = 250;
  std::uint64_t seed = 0;
};

struct Embedding2D {
  Eigen::MatrixX2d coordinates;
  double kl_divergence = 0.0;          // at the final iteration
  double kl_after_exaggeration = 0.0;  // at the last exaggerated iteration, against the true P
  double perplexity = 0.0;
  int iterations = 0;
  std::uint64_t seed = 0;
};

/// Exact t-SNE: per-row bandwidths by bisection on the entropy (within 1e-4 nats),
/// symmetrized P, early exaggeration, momentum 0.5 then 0.8, and per-coordinate gains.
/// Throws InvalidArgument when m < 3 * perplexity, d < 1 or features are not finite.
Embedding2D tsne(const Eigen::MatrixXd& features, const TsneConfig& config);

/// Row-conditional affinities p_{j|i} for the given perplexity (m x m, zero diagonal).
Eigen::MatrixXd conditional_affinities(const Eigen::MatrixXd& features, double perplexity);

/// Symmetrized joint affinities (p_{j|i} + p_{i|j}) / 2m, floored at 1e-12, zero diagonal.
Eigen::MatrixXd joint_affinities(const Eigen::MatrixXd& features, double perplexity);
/// Mean silhouette coefficient of labelled points under Euclidean distance.
/// Singleton clusters contribute 0. Throws InvalidArgument with fewer than two labels present.
double silhouette(const Eigen::MatrixXd& points, std::span<const int> labels);

}  // namespace abdoshape::analysis
