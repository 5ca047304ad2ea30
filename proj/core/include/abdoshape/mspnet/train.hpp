#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "abdoshape/mspnet/model.hpp"

namespace abdoshape::mspnet {

struct TrainingHistory {
  std::vector<double> epoch_loss;      // mean cross-entropy over the epoch
  std::vector<double> epoch_accuracy;  // training accuracy during the epoch
};

struct TrainResult {
  MspNetModel model;
  TrainingHistory history;
};

/// Minimizes softmax cross-entropy with Adam over shuffled mini-batches.
/// Gradients of a batch are summed subject by subject in batch order, so the
/// run is a deterministic function of (dataset, config).
/// Throws DataError if either class has fewer than two subjects.
TrainResult train(const std::vector<LabeledSubject>& dataset, const MspNetConfig& config);

/// Writes `<stem>.tnsr` (parameters) and `<stem>.json` (config and history).
void save_model(const std::filesystem::path& stem, const MspNetModel& model, const TrainingHistory& history);
TrainResult load_model(const std::filesystem::path& stem);

}  // namespace abdoshape::mspnet
