#include "abdoshape/mspnet/train.hpp"

#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "abdoshape/error.hpp"
#include "abdoshape/geometry/io.hpp"
#include "abdoshape/neural/adam.hpp"
#include "abdoshape/neural/checkpoint.hpp"
#include "abdoshape/random.hpp"

namespace abdoshape::mspnet {

namespace {

void round_to_float(neural::ParameterStore& store) {
  for (auto& t : store.values()) {
    for (auto& v : t.values) v = static_cast<double>(static_cast<float>(v));
  }
}

}  // namespace

TrainResult train(const std::vector<LabeledSubject>& dataset, const MspNetConfig& config) {
  config.validate();
  std::size_t counts[2] = {0, 0};
  for (const auto& s : dataset) {
    if (s.label != 0 && s.label != 1) throw DataError("subject '" + s.id + "' has label outside {0, 1}");
    ++counts[s.label];
  }
  if (counts[0] < 2 || counts[1] < 2) {
    throw DataError("training needs at least two subjects per class (have " + std::to_string(counts[0]) + " and " +
                    std::to_string(counts[1]) + ")");
  }

  TrainResult result{MspNetModel::initialize(config), {}};
  auto& params = result.model.parameters();
  if (config.single_precision_parameters) round_to_float(params);
  auto adam = neural::make_adam_state(params.values(), {config.learning_rate, config.beta1, config.beta2, 1e-8});

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(config.seed ^ 0x7ea1'5eedULL);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const double inv = 1.0 / static_cast<double>(end - start);
      std::vector<neural::Tensor> grads;
      for (std::size_t b = start; b < end; ++b) {
        const auto& subject = dataset[order[b]];
        neural::Tape tape;
        neural::ParameterBinding bind(tape, params);
        neural::Var logits;
        const neural::Var loss = result.model.loss(bind, subject, &logits);
        tape.backward(loss);
        loss_sum += loss.value()[0];
        const auto& z = logits.value().values;
        const int predicted = z[1] > z[0] ? 1 : 0;
        if (predicted == subject.label) ++correct;
        auto g = bind.gradients();
        if (grads.empty()) {
          grads = std::move(g);
        } else {
          for (std::size_t i = 0; i < g.size(); ++i) {
            for (std::size_t j = 0; j < g[i].size(); ++j) grads[i][j] += g[i][j];
          }
        }
      }
      for (auto& g : grads) {
        for (auto& v : g.values) v *= inv;
      }
      neural::adam_step(params.values(), grads, adam);
      if (config.single_precision_parameters) round_to_float(params);
    }
    result.history.epoch_loss.push_back(loss_sum / static_cast<double>(order.size()));
    result.history.epoch_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(order.size()));
  }
  return result;
}

void save_model(const std::filesystem::path& stem, const MspNetModel& model, const TrainingHistory& history) {
  auto tnsr = stem;
  tnsr += ".tnsr";
  auto json_path = stem;
  json_path += ".json";
  geometry::write_file_atomic(tnsr, neural::encode_checkpoint(model.parameters()));
  nlohmann::json j;
  j["format"] = "abdoshape-mspnet";
  j["config"] = nlohmann::json::parse(config_to_json(model.config()));
  j["parameters"] = model.parameters().scalar_count();
  j["history"]["epoch_loss"] = history.epoch_loss;
  j["history"]["epoch_accuracy"] = history.epoch_accuracy;
  j["checkpoint"] = tnsr.filename().string();
  geometry::write_file_atomic(json_path, j.dump(2) + "\n");
}

TrainResult load_model(const std::filesystem::path& stem) {
  auto tnsr = stem;
  tnsr += ".tnsr";
  auto json_path = stem;
  json_path += ".json";
  std::ifstream in(json_path);
  if (!in) throw DataError("cannot open " + json_path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(buffer.str());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(json_path.string() + ": " + e.what());
  }
  if (j.value("format", "") != "abdoshape-mspnet") throw DataError(json_path.string() + ": not an MSPNet sidecar");
  const auto config = config_from_json(j.at("config").dump());
  TrainResult result{MspNetModel::from_parameters(config, neural::read_checkpoint(tnsr)), {}};
  if (j.contains("history")) {
    result.history.epoch_loss = j["history"].value("epoch_loss", std::vector<double>{});
    result.history.epoch_accuracy = j["history"].value("epoch_accuracy", std::vector<double>{});
  }
  return result;
}

}  // namespace abdoshape::mspnet
