#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "abdoshape/error.hpp"
#include "abdoshape/mspnet/model.hpp"
#include "abdoshape/mspnet/train.hpp"
#include "abdoshape/neural/grad_check.hpp"
#include "property.hpp"

namespace m = abdoshape::mspnet;
namespace n = abdoshape::neural;
using abdoshape::Rng;
using abdoshape::geometry::PointCloud;
using abdoshape::testing::for_all_seeds;

namespace {

m::MspNetConfig tiny_config(std::uint64_t seed = 1) {
  m::MspNetConfig c;
  c.points = 32;
  c.point_widths = {8, 16};
  c.tnet_point_widths = {8, 16};
  c.tnet_dense_widths = {8};
  c.head_widths = {8, 2};
  c.learning_rate = 1e-2;
  c.epochs = 20;
  c.batch_size = 4;
  c.seed = seed;
  return c;
}

PointCloud blob(Rng& rng, std::size_t count, double radius) {
  PointCloud cloud;
  cloud.points.resize(static_cast<Eigen::Index>(count), 3);
  for (std::size_t i = 0; i < count; ++i) {
    Eigen::Vector3d p(rng.normal(), rng.normal(), rng.normal());
    p = p.normalized() * radius;
    p.y() *= 0.7;
    p.z() *= 0.5;
    cloud.points.row(static_cast<Eigen::Index>(i)) = p.transpose();
  }
  return cloud;
}

// Class 1 organs are larger: the task is learnable from the max-pooled features.
std::vector<m::LabeledSubject> toy_dataset(std::size_t per_class, std::uint64_t seed, std::size_t points = 32) {
  Rng rng(seed);
  std::vector<m::LabeledSubject> data;
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    m::LabeledSubject s;
    s.label = static_cast<int>(i % 2);
    s.id = "s" + std::to_string(i);
    const double scale = s.label == 1 ? 2.0 : 1.0;
    s.liver = blob(rng, points, 20.0 * scale * rng.uniform(0.9, 1.1));
    s.spleen = blob(rng, points, 10.0 * scale * rng.uniform(0.9, 1.1));
    data.push_back(std::move(s));
  }
  return data;
}

// Replaces every parameter with N(0, sd) so that no layer is trivially zero.
void randomize(m::MspNetModel& model, std::uint64_t seed, double sd = 0.3) {
  Rng rng(seed);
  for (auto& t : model.parameters().values()) {
    for (auto& v : t.values) v = rng.normal(0.0, sd);
  }
}

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("abdoshape_mspnet_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST(MspNet, TNetStartsAtIdentity) {
  const auto model = m::MspNetModel::initialize(tiny_config());
  Rng rng(3);
  const auto cloud = blob(rng, 32, 15.0);
  for (auto organ : {m::Organ::kLiver, m::Organ::kSpleen}) {
    const auto t = model.tnet_forward(organ, cloud);
    ASSERT_EQ(t.shape, (n::Shape{3, 3}));
    for (std::size_t r = 0; r < 3; ++r) {
      for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(t(r, c), r == c ? 1.0 : 0.0);
    }
  }
}

TEST(MspNet, ParameterNamesAreScopedByBranch) {
  const auto separate = m::MspNetModel::initialize(tiny_config());
  EXPECT_TRUE(separate.parameters().find("liver.tnet.point0.weight").has_value());
  EXPECT_TRUE(separate.parameters().find("spleen.point1.bias").has_value());
  auto cfg = tiny_config();
  cfg.shared_branch_weights = true;
  const auto shared = m::MspNetModel::initialize(cfg);
  EXPECT_TRUE(shared.parameters().find("shared.point0.weight").has_value());
  EXPECT_FALSE(shared.parameters().find("spleen.point0.weight").has_value());
  EXPECT_LT(shared.parameters().scalar_count(), separate.parameters().scalar_count());
}

TEST(MspNetProperty, BranchFeatureIgnoresPointOrder) {
  for_all_seeds(10, 41, [](Rng& rng, std::uint64_t seed) {
    auto model = m::MspNetModel::initialize(tiny_config(seed));
    randomize(model, seed);
    const auto cloud = blob(rng, 40, 20.0);
    std::vector<Eigen::Index> perm(40);
    for (Eigen::Index i = 0; i < 40; ++i) perm[static_cast<std::size_t>(i)] = i;
    rng.shuffle(std::span<Eigen::Index>(perm));
    PointCloud shuffled = cloud;
    for (Eigen::Index i = 0; i < 40; ++i) shuffled.points.row(i) = cloud.points.row(perm[static_cast<std::size_t>(i)]);
    const auto a = model.branch_forward(m::Organ::kLiver, cloud);
    const auto b = model.branch_forward(m::Organ::kLiver, shuffled);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
  });
}

TEST(MspNetProperty, DuplicatedPointsLeaveFeatureUnchanged) {
  for_all_seeds(10, 42, [](Rng& rng, std::uint64_t seed) {
    auto model = m::MspNetModel::initialize(tiny_config(seed));
    randomize(model, seed);
    const auto cloud = blob(rng, 24, 20.0);
    PointCloud doubled;
    doubled.points.resize(48, 3);
    doubled.points.topRows(24) = cloud.points;
    doubled.points.bottomRows(24) = cloud.points;
    // The T-Net also max-pools, so the whole branch sees the same set.
    const auto a = model.branch_forward(m::Organ::kSpleen, cloud);
    const auto b = model.branch_forward(m::Organ::kSpleen, doubled);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
  });
}

TEST(MspNet, DistantOutlierChangesFeature) {
  auto model = m::MspNetModel::initialize(tiny_config(5));
  randomize(model, 5);
  Rng rng(6);
  const auto cloud = blob(rng, 32, 20.0);
  PointCloud with_outlier = cloud;
  with_outlier.points.row(7) << 400.0, -300.0, 250.0;
  const auto a = model.branch_forward(m::Organ::kLiver, cloud);
  const auto b = model.branch_forward(m::Organ::kLiver, with_outlier);
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) diff = std::max(diff, std::abs(a[i] - b[i]));
  EXPECT_GT(diff, 1e-3);
}

TEST(MspNet, ZeroHeadGivesEvenOdds) {
  auto model = m::MspNetModel::initialize(tiny_config());
  for (const auto& layer : model.head()) {
    for (auto& v : model.parameters().value(layer.weight).values) v = 0.0;
    for (auto& v : model.parameters().value(layer.bias).values) v = 0.0;
  }
  const auto data = toy_dataset(1, 2);
  const auto logits = model.logits(data[0]);
  EXPECT_EQ(logits[0], 0.0);
  EXPECT_EQ(logits[1], 0.0);
  EXPECT_EQ(model.predict_proba(data[0]), 0.5);
}

TEST(MspNet, ProbabilityFromLogits) {
  EXPECT_EQ(m::probability_from_logits({0.0, 0.0}), 0.5);
  EXPECT_NEAR(m::probability_from_logits({0.0, std::log(3.0)}), 0.75, 1e-15);
  EXPECT_EQ(m::probability_from_logits({0.0, 1000.0}), 1.0);
  EXPECT_EQ(m::probability_from_logits({1000.0, 0.0}), 0.0);
}

TEST(MspNet, FusedFeatureLayout) {
  auto model = m::MspNetModel::initialize(tiny_config());
  randomize(model, 9);
  const auto data = toy_dataset(1, 3);
  const auto fused = model.global_features(data[0]);
  ASSERT_EQ(fused.size(), model.config().fused_width());
  const auto liver = model.branch_forward(m::Organ::kLiver, data[0].liver);
  const auto spleen = model.branch_forward(m::Organ::kSpleen, data[0].spleen);
  for (std::size_t i = 0; i < liver.size(); ++i) EXPECT_EQ(fused[i], liver[i]);
  for (std::size_t i = 0; i < spleen.size(); ++i) EXPECT_EQ(fused[liver.size() + i], spleen[i]);
  const std::vector<std::vector<double>> both{liver, spleen};
  const auto direct = model.fuse_and_classify(both);
  const auto via_subject = model.logits(data[0]);
  EXPECT_EQ(direct, via_subject);
}

TEST(MspNet, MissingBranchRejected) {
  const auto model = m::MspNetModel::initialize(tiny_config());
  auto data = toy_dataset(1, 4);
  data[0].spleen = PointCloud{};
  EXPECT_THROW(model.logits(data[0]), abdoshape::InvalidArgument);
  const std::vector<std::vector<double>> one{std::vector<double>(16, 0.0)};
  EXPECT_THROW(model.fuse_and_classify(one), abdoshape::InvalidArgument);
  const std::vector<std::vector<double>> wrong{std::vector<double>(16, 0.0), std::vector<double>(15, 0.0)};
  EXPECT_THROW(model.fuse_and_classify(wrong), abdoshape::InvalidArgument);

  auto cfg = tiny_config();
  cfg.structures = {m::Organ::kLiver};
  const auto liver_only = m::MspNetModel::initialize(cfg);
  EXPECT_NO_THROW(liver_only.logits(data[0]));
  EXPECT_THROW(liver_only.branch_forward(m::Organ::kSpleen, data[1].spleen), abdoshape::InvalidArgument);
}

TEST(MspNetProperty, EndToEndGradientMatchesFiniteDifferences) {
  for (bool ortho : {false, true}) {
    for_all_seeds(3, ortho ? 44 : 43, [&](Rng&, std::uint64_t seed) {
      auto cfg = tiny_config(seed);
      cfg.orthogonality_weight = ortho ? 0.01 : 0.0;
      cfg.affine_normalization = ortho;
      auto model = m::MspNetModel::initialize(cfg);
      randomize(model, seed);
      const auto data = toy_dataset(1, seed, 16);
      const auto layout = model.parameters();
      const n::ScalarFunction f = [&](std::span<const double> x, std::span<double> grad) {
        auto params = layout;
        std::size_t offset = 0;
        for (auto& t : params.values()) {
          std::copy(x.begin() + offset, x.begin() + offset + t.size(), t.values.begin());
          offset += t.size();
        }
        const auto probe = m::MspNetModel::from_parameters(cfg, params);
        n::Tape tape;
        n::ParameterBinding bind(tape, probe.parameters());
        n::Var total = probe.loss(bind, data[0]);
        total = n::add(total, probe.loss(bind, data[1]));
        if (!grad.empty()) {
          tape.backward(total);
          offset = 0;
          for (const auto& g : bind.gradients()) {
            std::copy(g.values.begin(), g.values.end(), grad.begin() + offset);
            offset += g.size();
          }
        }
        return total.value()[0];
      };
      std::vector<double> point;
      for (const auto& t : layout.values()) point.insert(point.end(), t.values.begin(), t.values.end());
      EXPECT_LE(n::grad_check(f, point), 1e-4);
    });
  }
}

TEST(MspNetTraining, LossDecreases) {
  const auto data = toy_dataset(6, 11);
  auto cfg = tiny_config(2);
  cfg.epochs = 30;
  const auto result = m::train(data, cfg);
  ASSERT_EQ(result.history.epoch_loss.size(), 30u);
  const double first = result.history.epoch_loss.front();
  const double last = result.history.epoch_loss.back();
  EXPECT_LT(last, first) << first << " -> " << last;
}

TEST(MspNetTraining, OverfitsFourSubjects) {
  const auto data = toy_dataset(2, 12);
  auto cfg = tiny_config(3);
  cfg.epochs = 150;
  cfg.batch_size = 4;
  const auto result = m::train(data, cfg);
  for (const auto& s : data) {
    const int predicted = result.model.predict_proba(s) >= 0.5 ? 1 : 0;
    EXPECT_EQ(predicted, s.label) << s.id;
  }
  EXPECT_EQ(result.history.epoch_accuracy.back(), 1.0);
}

TEST(MspNetTraining, DeterministicForFixedSeed) {
  const auto data = toy_dataset(3, 13);
  auto cfg = tiny_config(4);
  cfg.epochs = 5;
  cfg.batch_size = 2;
  const auto a = m::train(data, cfg);
  const auto b = m::train(data, cfg);
  EXPECT_EQ(a.model.parameters(), b.model.parameters());
  EXPECT_EQ(a.history.epoch_loss, b.history.epoch_loss);
  cfg.seed = 5;
  const auto c = m::train(data, cfg);
  EXPECT_FALSE(a.model.parameters() == c.model.parameters());
}

TEST(MspNetTraining, SinglePrecisionParametersAreFloats) {
  const auto data = toy_dataset(2, 14);
  auto cfg = tiny_config(6);
  cfg.epochs = 3;
  cfg.single_precision_parameters = true;
  const auto result = m::train(data, cfg);
  for (const auto& t : result.model.parameters().values()) {
    for (double v : t.values) EXPECT_EQ(v, static_cast<double>(static_cast<float>(v)));
  }
}

TEST(MspNetTraining, NeedsTwoSubjectsPerClass) {
  auto data = toy_dataset(3, 15);
  for (auto& s : data) s.label = 0;
  EXPECT_THROW(m::train(data, tiny_config()), abdoshape::DataError);
  auto small = toy_dataset(3, 16);
  small.resize(3);  // labels 0, 1, 0
  EXPECT_THROW(m::train(small, tiny_config()), abdoshape::DataError);
}

TEST(MspNetIo, SaveLoadIsBitwise) {
  const auto data = toy_dataset(2, 17);
  auto cfg = tiny_config(7);
  cfg.epochs = 3;
  const auto trained = m::train(data, cfg);
  const auto dir = scratch_dir("save");
  m::save_model(dir / "model", trained.model, trained.history);
  EXPECT_TRUE(std::filesystem::exists(dir / "model.tnsr"));
  EXPECT_TRUE(std::filesystem::exists(dir / "model.json"));
  const auto loaded = m::load_model(dir / "model");
  EXPECT_EQ(loaded.model.parameters(), trained.model.parameters());
  EXPECT_EQ(loaded.history.epoch_loss, trained.history.epoch_loss);
  for (const auto& s : data) EXPECT_EQ(loaded.model.logits(s), trained.model.logits(s));
}

TEST(MspNetIo, ConfigJsonRoundTrip) {
  auto cfg = tiny_config(99);
  cfg.structures = {m::Organ::kSpleen, m::Organ::kLiver};
  cfg.shared_branch_weights = true;
  cfg.orthogonality_weight = 0.001;
  cfg.coordinate_scale = 0.125;
  const auto back = m::config_from_json(m::config_to_json(cfg));
  EXPECT_EQ(back.point_widths, cfg.point_widths);
  EXPECT_EQ(back.structures, cfg.structures);
  EXPECT_EQ(back.seed, cfg.seed);
  EXPECT_EQ(back.shared_branch_weights, true);
  EXPECT_EQ(back.orthogonality_weight, 0.001);
  EXPECT_EQ(back.coordinate_scale, 0.125);
  EXPECT_THROW(m::config_from_json("{not json"), abdoshape::DataError);
}

TEST(MspNetIo, MismatchedCheckpointRejected) {
  const auto model = m::MspNetModel::initialize(tiny_config());
  auto other = tiny_config();
  other.point_widths = {8, 32};
  EXPECT_THROW(m::MspNetModel::from_parameters(other, model.parameters()), abdoshape::DataError);
}

TEST(MspNetConfig, Validation) {
  auto cfg = tiny_config();
  cfg.head_widths = {8, 3};
  EXPECT_THROW(cfg.validate(), abdoshape::InvalidArgument);
  cfg = tiny_config();
  cfg.points = 4;
  EXPECT_THROW(cfg.validate(), abdoshape::InvalidArgument);
  cfg = tiny_config();
  cfg.structures = {m::Organ::kLiver, m::Organ::kLiver};
  EXPECT_THROW(cfg.validate(), abdoshape::InvalidArgument);
  EXPECT_THROW(m::parse_organ("kidney"), abdoshape::InvalidArgument);
  EXPECT_EQ(m::parse_organ("spleen"), m::Organ::kSpleen);
}
