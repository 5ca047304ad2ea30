#include "abdoshape/mspnet/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <json.hpp>

#include "abdoshape/error.hpp"
#include "abdoshape/random.hpp"

namespace abdoshape::mspnet {

using neural::ParameterBinding;
using neural::Tape;
using neural::Tensor;
using neural::Var;

const char* organ_name(Organ organ) { return organ == Organ::kLiver ? "liver" : "spleen"; }

Organ parse_organ(const std::string& name) {
  if (name == "liver") return Organ::kLiver;
  if (name == "spleen") return Organ::kSpleen;
  throw InvalidArgument("unknown organ '" + name + "' (expected liver or spleen)");
}

void MspNetConfig::validate() const {
  auto positive = [](const std::vector<std::size_t>& widths, const char* what) {
    if (widths.empty()) throw InvalidArgument(std::string(what) + " must not be empty");
    for (auto w : widths) {
      if (w < 1) throw InvalidArgument(std::string(what) + " widths must be >= 1");
    }
  };
  positive(point_widths, "per-point layer");
  positive(tnet_point_widths, "T-Net per-point layer");
  positive(head_widths, "head layer");
  for (auto w : tnet_dense_widths) {
    if (w < 1) throw InvalidArgument("T-Net dense widths must be >= 1");
  }
  if (head_widths.back() != 2) throw InvalidArgument("last head width must equal the class count 2");
  if (points < 8) throw InvalidArgument("points per cloud must be >= 8");
  if (structures.empty() || structures.size() > 2) throw InvalidArgument("one or two structures are supported");
  if (structures.size() == 2 && structures[0] == structures[1]) throw InvalidArgument("duplicate structure");
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning rate must be > 0");
  if (epochs < 0) throw InvalidArgument("epochs must be >= 0");
  if (batch_size < 1) throw InvalidArgument("batch size must be >= 1");
  if (!(coordinate_scale > 0.0)) throw InvalidArgument("coordinate scale must be > 0");
  if (orthogonality_weight < 0.0) throw InvalidArgument("orthogonality weight must be >= 0");
}

std::string config_to_json(const MspNetConfig& c) {
  nlohmann::json j;
  j["points"] = c.points;
  j["point_widths"] = c.point_widths;
  j["tnet_point_widths"] = c.tnet_point_widths;
  j["tnet_dense_widths"] = c.tnet_dense_widths;
  j["head_widths"] = c.head_widths;
  j["learning_rate"] = c.learning_rate;
  j["beta1"] = c.beta1;
  j["beta2"] = c.beta2;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["seed"] = c.seed;
  std::vector<std::string> structures;
  for (auto o : c.structures) structures.emplace_back(organ_name(o));
  j["structures"] = structures;
  j["shared_branch_weights"] = c.shared_branch_weights;
  j["affine_normalization"] = c.affine_normalization;
  j["orthogonality_weight"] = c.orthogonality_weight;
  j["coordinate_scale"] = c.coordinate_scale;
  j["single_precision_parameters"] = c.single_precision_parameters;
  j["loss"] = "softmax_cross_entropy";
  j["optimizer"] = "adam";
  return j.dump(2);
}

MspNetConfig config_from_json(const std::string& text) {
  MspNetConfig c;
  try {
    const auto j = nlohmann::json::parse(text);
    c.points = j.at("points").get<std::size_t>();
    c.point_widths = j.at("point_widths").get<std::vector<std::size_t>>();
    c.tnet_point_widths = j.at("tnet_point_widths").get<std::vector<std::size_t>>();
    c.tnet_dense_widths = j.at("tnet_dense_widths").get<std::vector<std::size_t>>();
    c.head_widths = j.at("head_widths").get<std::vector<std::size_t>>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.beta1 = j.value("beta1", c.beta1);
    c.beta2 = j.value("beta2", c.beta2);
    c.epochs = j.at("epochs").get<int>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.structures.clear();
    for (const auto& s : j.at("structures")) c.structures.push_back(parse_organ(s.get<std::string>()));
    c.shared_branch_weights = j.value("shared_branch_weights", false);
    c.affine_normalization = j.value("affine_normalization", false);
    c.orthogonality_weight = j.value("orthogonality_weight", 0.0);
    c.coordinate_scale = j.value("coordinate_scale", c.coordinate_scale);
    c.single_precision_parameters = j.value("single_precision_parameters", false);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("MSPNet config JSON: ") + e.what());
  }
  c.validate();
  return c;
}

namespace {

struct LayoutBuilder {
  neural::ParameterStore& store;
  const MspNetConfig& config;
  Rng* rng;  // null: zero-filled placeholders

  Tensor weights(std::size_t in, std::size_t out, bool zero) {
    Tensor w = Tensor::zeros({in, out});
    if (rng && !zero) {
      const double bound = std::sqrt(6.0 / static_cast<double>(in));
      for (auto& v : w.values) v = rng->uniform(-bound, bound);
    }
    return w;
  }

  DenseLayer dense(const std::string& name, std::size_t in, std::size_t out, bool normalize, bool zero = false) {
    DenseLayer layer;
    layer.weight = store.add(name + ".weight", weights(in, out, zero));
    layer.bias = store.add(name + ".bias", Tensor::zeros({out}));
    if (normalize) {
      layer.gamma = store.add(name + ".gamma", Tensor::filled({out}, 1.0));
      layer.beta = store.add(name + ".beta", Tensor::zeros({out}));
    }
    return layer;
  }

  BranchLayout branch(const std::string& prefix) {
    BranchLayout b;
    std::size_t in = 3;
    for (std::size_t i = 0; i < config.tnet_point_widths.size(); ++i) {
      b.tnet_point.push_back(dense(prefix + ".tnet.point" + std::to_string(i), in, config.tnet_point_widths[i],
                                   config.affine_normalization));
      in = config.tnet_point_widths[i];
    }
    for (std::size_t i = 0; i < config.tnet_dense_widths.size(); ++i) {
      b.tnet_dense.push_back(dense(prefix + ".tnet.dense" + std::to_string(i), in, config.tnet_dense_widths[i], false));
      in = config.tnet_dense_widths[i];
    }
    b.tnet_out = dense(prefix + ".tnet.out", in, 9, false, /*zero=*/true);
    in = 3;
    for (std::size_t i = 0; i < config.point_widths.size(); ++i) {
      b.point.push_back(
          dense(prefix + ".point" + std::to_string(i), in, config.point_widths[i], config.affine_normalization));
      in = config.point_widths[i];
    }
    return b;
  }

  std::vector<DenseLayer> head() {
    std::vector<DenseLayer> layers;
    std::size_t in = config.fused_width();
    for (std::size_t i = 0; i < config.head_widths.size(); ++i) {
      layers.push_back(dense("head.dense" + std::to_string(i), in, config.head_widths[i], false));
      in = config.head_widths[i];
    }
    return layers;
  }
};

Var apply_dense(ParameterBinding& bind, const DenseLayer& layer, Var x, bool normalize, bool activate) {
  Var h = neural::add_broadcast(neural::matmul(x, bind(layer.weight)), bind(layer.bias));
  if (normalize) h = neural::add_broadcast(neural::mul_broadcast(h, bind(layer.gamma)), bind(layer.beta));
  return activate ? neural::relu(h) : h;
}

Tensor identity3() { return Tensor({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1}); }

}  // namespace

MspNetModel MspNetModel::initialize(const MspNetConfig& config) {
  config.validate();
  MspNetModel model;
  model.config_ = config;
  Rng rng(config.seed);
  LayoutBuilder builder{model.params_, config, &rng};
  if (config.shared_branch_weights) {
    model.branches_.push_back(builder.branch("shared"));
  } else {
    for (auto organ : config.structures) model.branches_.push_back(builder.branch(organ_name(organ)));
  }
  model.head_ = builder.head();
  return model;
}

MspNetModel MspNetModel::from_parameters(const MspNetConfig& config, neural::ParameterStore params) {
  config.validate();
  MspNetModel model;
  model.config_ = config;
  LayoutBuilder builder{model.params_, config, nullptr};
  if (config.shared_branch_weights) {
    model.branches_.push_back(builder.branch("shared"));
  } else {
    for (auto organ : config.structures) model.branches_.push_back(builder.branch(organ_name(organ)));
  }
  model.head_ = builder.head();
  if (params.names() != model.params_.names()) throw DataError("checkpoint parameter names do not match the config");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params.value(i).shape != model.params_.value(i).shape) {
      throw DataError("checkpoint parameter '" + params.name(i) + "' has shape " +
                      neural::shape_string(params.value(i).shape) + ", config expects " +
                      neural::shape_string(model.params_.value(i).shape));
    }
  }
  model.params_ = std::move(params);
  return model;
}

std::size_t MspNetModel::branch_index(Organ organ) const {
  for (std::size_t i = 0; i < config_.structures.size(); ++i) {
    if (config_.structures[i] == organ) return config_.shared_branch_weights ? 0 : i;
  }
  throw InvalidArgument(std::string("model has no ") + organ_name(organ) + " branch");
}

Var MspNetModel::input(Tape& tape, const geometry::PointCloud& cloud) const {
  if (cloud.size() == 0) throw InvalidArgument("empty point cloud");
  Tensor t = Tensor::zeros({cloud.size(), 3});
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (int d = 0; d < 3; ++d) t(i, d) = cloud.points(static_cast<Eigen::Index>(i), d) * config_.coordinate_scale;
  }
  return tape.leaf(std::move(t));
}

Var MspNetModel::tnet(ParameterBinding& bind, Organ organ, Var cloud) const {
  const auto& b = branches_[branch_index(organ)];
  Var h = cloud;
  for (const auto& layer : b.tnet_point) h = apply_dense(bind, layer, h, config_.affine_normalization, true);
  h = neural::max_over_points(h);
  for (const auto& layer : b.tnet_dense) h = apply_dense(bind, layer, h, false, true);
  h = apply_dense(bind, b.tnet_out, h, false, false);
  return neural::add(neural::reshape(h, {3, 3}), cloud.tape().leaf(identity3()));
}

Var MspNetModel::branch(ParameterBinding& bind, Organ organ, Var cloud, Var* transform_out) const {
  const auto& b = branches_[branch_index(organ)];
  const Var transform = tnet(bind, organ, cloud);
  if (transform_out) *transform_out = transform;
  Var h = neural::batch_matmul(cloud, transform);
  for (const auto& layer : b.point) h = apply_dense(bind, layer, h, config_.affine_normalization, true);
  return neural::max_over_points(h);
}

Var MspNetModel::classify(ParameterBinding& bind, std::span<const Var> features) const {
  if (features.size() != config_.structures.size()) {
    throw InvalidArgument("expected " + std::to_string(config_.structures.size()) + " branch features, got " +
                          std::to_string(features.size()));
  }
  Var h = features[0];
  for (std::size_t i = 1; i < features.size(); ++i) h = neural::concat(h, features[i], 1);
  for (std::size_t i = 0; i < head_.size(); ++i) {
    h = apply_dense(bind, head_[i], h, false, i + 1 < head_.size());
  }
  return h;
}

Var MspNetModel::loss(ParameterBinding& bind, const LabeledSubject& subject, Var* logits_out) const {
  if (subject.label != 0 && subject.label != 1) throw InvalidArgument("label must be 0 or 1");
  Tape& tape = bind(0).tape();
  std::vector<Var> features;
  std::vector<Var> transforms;
  for (auto organ : config_.structures) {
    const auto& cloud = subject.cloud(organ);
    if (cloud.size() == 0) {
      throw InvalidArgument("subject '" + subject.id + "' has no " + organ_name(organ) + " cloud");
    }
    Var transform;
    features.push_back(branch(bind, organ, input(tape, cloud), &transform));
    transforms.push_back(transform);
  }
  const Var logits = classify(bind, features);
  if (logits_out) *logits_out = logits;
  Var total = neural::softmax_cross_entropy(logits, static_cast<std::size_t>(subject.label));
  if (config_.orthogonality_weight > 0.0) {
    const Var minus_identity = tape.leaf(Tensor({3, 3}, {-1, 0, 0, 0, -1, 0, 0, 0, -1}));
    for (const auto& t : transforms) {
      const Var gram = neural::add(neural::batch_matmul(t, t), minus_identity);
      total = neural::add(total, neural::scale(neural::sum(neural::mul(gram, gram)), config_.orthogonality_weight));
    }
  }
  return total;
}

Tensor MspNetModel::tnet_forward(Organ organ, const geometry::PointCloud& cloud) const {
  Tape tape;
  ParameterBinding bind(tape, params_);
  return tnet(bind, organ, input(tape, cloud)).value();
}

std::vector<double> MspNetModel::branch_forward(Organ organ, const geometry::PointCloud& cloud) const {
  Tape tape;
  ParameterBinding bind(tape, params_);
  return branch(bind, organ, input(tape, cloud)).value().values;
}

std::array<double, 2> MspNetModel::fuse_and_classify(std::span<const std::vector<double>> features) const {
  if (features.size() != config_.structures.size()) {
    throw InvalidArgument("missing branch feature: expected " + std::to_string(config_.structures.size()) + ", got " +
                          std::to_string(features.size()));
  }
  Tape tape;
  ParameterBinding bind(tape, params_);
  std::vector<Var> vars;
  for (const auto& f : features) {
    if (f.size() != config_.feature_width()) {
      throw InvalidArgument("branch feature has " + std::to_string(f.size()) + " values, expected " +
                            std::to_string(config_.feature_width()));
    }
    vars.push_back(tape.leaf(Tensor({1, f.size()}, f)));
  }
  const auto& v = classify(bind, vars).value().values;
  return {v[0], v[1]};
}

std::array<double, 2> MspNetModel::logits(const LabeledSubject& subject) const {
  std::vector<std::vector<double>> features;
  for (auto organ : config_.structures) {
    const auto& cloud = subject.cloud(organ);
    if (cloud.size() == 0) {
      throw InvalidArgument("subject '" + subject.id + "' has no " + organ_name(organ) + " cloud");
    }
    features.push_back(branch_forward(organ, cloud));
  }
  return fuse_and_classify(features);
}

double probability_from_logits(const std::array<double, 2>& logits) {
  return neural::softmax({logits[0], logits[1]})[1];
}

double MspNetModel::predict_proba(const LabeledSubject& subject) const {
  return probability_from_logits(logits(subject));
}

std::vector<double> MspNetModel::global_features(const LabeledSubject& subject) const {
  std::vector<double> out;
  for (auto organ : config_.structures) {
    const auto f = branch_forward(organ, subject.cloud(organ));
    out.insert(out.end(), f.begin(), f.end());
  }
  return out;
}

}  // namespace abdoshape::mspnet
