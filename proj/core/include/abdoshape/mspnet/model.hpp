#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "abdoshape/geometry/point_cloud.hpp"
#include "abdoshape/neural/parameters.hpp"
#include "abdoshape/neural/tensor.hpp"

namespace abdoshape::mspnet {

enum class Organ { kLiver, kSpleen };

const char* organ_name(Organ organ);
Organ parse_organ(const std::string& name);

/// Architecture and training hyperparameters.
struct MspNetConfig {
  std::size_t points = 1024;
  std::vector<std::size_t> point_widths{64, 64, 64, 128, 1024};
  std::vector<std::size_t> tnet_point_widths{64, 128, 1024};
  std::vector<std::size_t> tnet_dense_widths{512, 256};
  std::vector<std::size_t> head_widths{512, 256, 2};
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  int epochs = 200;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;
  /// Branch order; features are fused in this order, e.g. [liver || spleen].
  std::vector<Organ> structures{Organ::kLiver, Organ::kSpleen};
  bool shared_branch_weights = false;
  /// Per-feature scale and shift after every per-point layer.
  bool affine_normalization = false;
  /// Weight of ||T T^T - I||^2 in the loss; 0 disables the regularizer.
  double orthogonality_weight = 0.0;
  /// Multiplies input coordinates (mm) before the network; size information is preserved.
  double coordinate_scale = 0.02;
  /// Round parameters to single precision after every update.
  bool single_precision_parameters = false;

  /// Throws InvalidArgument if a width is zero, the head does not end in 2 classes, or points < 8.
  void validate() const;
  std::size_t feature_width() const { return point_widths.back(); }
  std::size_t fused_width() const { return feature_width() * structures.size(); }
};

std::string config_to_json(const MspNetConfig& config);
MspNetConfig config_from_json(const std::string& json);

/// One subject with per-organ surface clouds. Clouds for organs outside the
/// model's structures may be empty.
struct LabeledSubject {
  std::string id;
  geometry::PointCloud liver;
  geometry::PointCloud spleen;
  int label = 0;

  const geometry::PointCloud& cloud(Organ organ) const { return organ == Organ::kLiver ? liver : spleen; }
};

struct DenseLayer {
  std::size_t weight = 0;  // parameter index, in x out
  std::size_t bias = 0;
  std::size_t gamma = 0;   // affine normalization, when enabled
  std::size_t beta = 0;
};

struct BranchLayout {
  std::vector<DenseLayer> tnet_point;
  std::vector<DenseLayer> tnet_dense;
  DenseLayer tnet_out;
  std::vector<DenseLayer> point;
};

/// Multi-structure point network: one T-Net-aligned branch per organ, each
/// reducing its cloud to a global feature by a max over points, fused by
/// concatenation before a dense classification head.
class MspNetModel {
 public:
  /// Seeded He-uniform initialization; the T-Net output layer starts at zero, so T = I.
  static MspNetModel initialize(const MspNetConfig& config);
  /// Rebuilds the layout from `config` and adopts `params`; throws DataError if names or shapes differ.
  static MspNetModel from_parameters(const MspNetConfig& config, neural::ParameterStore params);

  const MspNetConfig& config() const { return config_; }
  const neural::ParameterStore& parameters() const { return params_; }
  neural::ParameterStore& parameters() { return params_; }
  const std::vector<DenseLayer>& head() const { return head_; }
  std::size_t branch_index(Organ organ) const;

  // Tape-level pieces used for training and gradient checks.
  neural::Var input(neural::Tape& tape, const geometry::PointCloud& cloud) const;
  neural::Var tnet(neural::ParameterBinding& bind, Organ organ, neural::Var cloud) const;
  neural::Var branch(neural::ParameterBinding& bind, Organ organ, neural::Var cloud,
                     neural::Var* transform_out = nullptr) const;
  neural::Var classify(neural::ParameterBinding& bind, std::span<const neural::Var> features) const;
  /// Cross-entropy of one subject (plus the orthogonality term when enabled).
  neural::Var loss(neural::ParameterBinding& bind, const LabeledSubject& subject,
                   neural::Var* logits_out = nullptr) const;

  // Value-level API.
  neural::Tensor tnet_forward(Organ organ, const geometry::PointCloud& cloud) const;
  std::vector<double> branch_forward(Organ organ, const geometry::PointCloud& cloud) const;
  /// Logits from per-structure features given in config().structures order.
  /// Throws InvalidArgument if a feature is missing or has the wrong width.
  std::array<double, 2> fuse_and_classify(std::span<const std::vector<double>> features) const;
  std::array<double, 2> logits(const LabeledSubject& subject) const;
  /// Softmax probability of class 1.
  double predict_proba(const LabeledSubject& subject) const;
  /// Concatenated pre-head feature (the fused S), length fused_width().
  std::vector<double> global_features(const LabeledSubject& subject) const;

 private:
  MspNetConfig config_;
  neural::ParameterStore params_;
  std::vector<BranchLayout> branches_;
  std::vector<DenseLayer> head_;
};

/// Softmax class-1 probability of a logit pair.
double probability_from_logits(const std::array<double, 2>& logits);

}  // namespace abdoshape::mspnet
