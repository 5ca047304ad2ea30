#include <algorithm>
#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "abdoshape/baseline/gbt.hpp"
#include "abdoshape/error.hpp"
#include "property.hpp"

namespace b = abdoshape::baseline;
using abdoshape::Rng;
using abdoshape::testing::for_all_seeds;

namespace {

struct Data {
  Eigen::MatrixXd x;
  std::vector<int> y;
};

// Labels depend on a noisy linear score so that every feature carries some signal.
Data labelled_data(Rng& rng, int rows, int cols) {
  Data d{Eigen::MatrixXd(rows, cols), std::vector<int>(static_cast<std::size_t>(rows))};
  for (int i = 0; i < rows; ++i) {
    double score = 0.0;
    for (int c = 0; c < cols; ++c) {
      d.x(i, c) = rng.normal();
      score += (c + 1) * d.x(i, c) / cols;
    }
    d.y[static_cast<std::size_t>(i)] = score + 0.5 * rng.normal() > 0 ? 1 : 0;
  }
  d.y[0] = 0;
  d.y[1] = 1;
  return d;
}

std::span<const double> row(const Eigen::MatrixXd& x, int i, std::vector<double>& buffer) {
  buffer.assign(static_cast<std::size_t>(x.cols()), 0.0);
  for (int c = 0; c < x.cols(); ++c) buffer[static_cast<std::size_t>(c)] = x(i, c);
  return buffer;
}

double accuracy(const b::GbtModel& model, const Data& d) {
  const auto p = b::predict_gbt(model, d.x);
  int hits = 0;
  for (std::size_t i = 0; i < p.size(); ++i) hits += (p[i] >= 0.5 ? 1 : 0) == d.y[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(p.size());
}

}  // namespace

TEST(Gbt, SeparatesOneDimensionalData) {
  Data d{Eigen::MatrixXd(20, 1), {}};
  for (int i = 0; i < 20; ++i) {
    d.x(i, 0) = i;
    d.y.push_back(i >= 10 ? 1 : 0);
  }
  b::GbtConfig cfg;
  cfg.rounds = 50;
  const auto model = b::train_gbt(d.x, d.y, cfg);
  EXPECT_EQ(accuracy(model, d), 1.0);
  EXPECT_EQ(model.trees.front().nodes.front().feature, 0);
  EXPECT_EQ(model.trees.front().nodes.front().threshold, 9.5);
}

TEST(Gbt, LearnsXor) {
  Rng rng(21);
  Data d{Eigen::MatrixXd(200, 2), {}};
  for (int i = 0; i < 200; ++i) {
    d.x(i, 0) = rng.uniform(-1, 1);
    d.x(i, 1) = rng.uniform(-1, 1);
    d.y.push_back((d.x(i, 0) > 0) != (d.x(i, 1) > 0) ? 1 : 0);
  }
  b::GbtConfig cfg;
  cfg.rounds = 100;
  const auto model = b::train_gbt(d.x, d.y, cfg);
  EXPECT_GE(accuracy(model, d), 0.95);
}

TEST(Gbt, RejectsDegenerateInput) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(6, 2);
  const std::vector<int> same(6, 1);
  EXPECT_THROW(b::train_gbt(x, same, {}), abdoshape::InvalidArgument);
  const std::vector<int> three{0, 1, 0};
  EXPECT_THROW(b::train_gbt(x.topRows(3), three, {}), abdoshape::InvalidArgument);
  const std::vector<int> ok{0, 1, 0, 1, 0, 1};
  EXPECT_THROW(b::train_gbt(x, std::vector<int>{0, 1, 0, 1}, {}), abdoshape::InvalidArgument);
  x(2, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(b::train_gbt(x, ok, {}), abdoshape::InvalidArgument);
  const std::vector<int> bad_label{0, 1, 0, 2, 0, 1};
  EXPECT_THROW(b::train_gbt(Eigen::MatrixXd::Zero(6, 2), bad_label, {}), abdoshape::InvalidArgument);
}

TEST(Gbt, ZeroRoundsPredictThePrior) {
  Rng rng(22);
  auto d = labelled_data(rng, 40, 3);
  for (std::size_t i = 0; i < d.y.size(); ++i) d.y[i] = static_cast<int>(i % 2);
  b::GbtConfig cfg;
  cfg.rounds = 0;
  const auto model = b::train_gbt(d.x, d.y, cfg);
  for (double p : b::predict_gbt(model, d.x)) EXPECT_EQ(p, 0.5);
}

TEST(Gbt, PredictionRejectsWrongWidth) {
  Rng rng(23);
  const auto d = labelled_data(rng, 20, 3);
  const auto model = b::train_gbt(d.x, d.y, {});
  const std::vector<double> short_row{1.0, 2.0};
  EXPECT_THROW(b::predict_gbt(model, short_row), abdoshape::InvalidArgument);
}

TEST(GbtProperty, TrainingLossNeverIncreases) {
  for_all_seeds(10, 51, [](Rng& rng, std::uint64_t seed) {
    const auto d = labelled_data(rng, 60 + static_cast<int>(rng.below(60)), 1 + static_cast<int>(rng.below(5)));
    b::GbtConfig cfg;
    cfg.rounds = 40;
    cfg.seed = seed;
    const auto model = b::train_gbt(d.x, d.y, cfg);
    ASSERT_EQ(model.training_loss.size(), 41u);
    for (std::size_t r = 1; r < model.training_loss.size(); ++r) {
      EXPECT_LE(model.training_loss[r], model.training_loss[r - 1] + 1e-12) << "round " << r;
    }
    std::vector<double> p = b::predict_gbt(model, d.x);
    EXPECT_NEAR(b::logistic_loss(p, d.y), model.training_loss.back(), 1e-12);
  });
}

TEST(GbtProperty, ProbabilitiesStayInsideClamp) {
  Data d{Eigen::MatrixXd(8, 1), {0, 0, 0, 0, 1, 1, 1, 1}};
  for (int i = 0; i < 8; ++i) d.x(i, 0) = i;
  b::GbtConfig cfg;
  cfg.rounds = 500;
  cfg.learning_rate = 1.0;
  cfg.min_leaf = 1;
  const auto model = b::train_gbt(d.x, d.y, cfg);
  for (double p : b::predict_gbt(model, d.x)) {
    EXPECT_GE(p, 1e-12);
    EXPECT_LE(p, 1.0 - 1e-12);
  }
}

// A single depth-1 tree must pick the split minimizing the squared error of the
// initial residuals; checked against a brute-force search over all midpoints.
TEST(GbtProperty, StumpMatchesExhaustiveSearch) {
  for_all_seeds(20, 52, [](Rng& rng, std::uint64_t) {
    const int rows = 10 + static_cast<int>(rng.below(30));
    const int cols = 1 + static_cast<int>(rng.below(4));
    const auto d = labelled_data(rng, rows, cols);
    b::GbtConfig cfg;
    cfg.rounds = 1;
    cfg.max_depth = 1;
    cfg.min_leaf = 1;
    cfg.learning_rate = 1.0;
    const auto model = b::train_gbt(d.x, d.y, cfg);

    double positives = 0;
    for (int y : d.y) positives += y;
    const double p0 = positives / rows;
    std::vector<double> r(static_cast<std::size_t>(rows));
    for (int i = 0; i < rows; ++i) r[static_cast<std::size_t>(i)] = d.y[static_cast<std::size_t>(i)] - p0;

    double best_sse = std::numeric_limits<double>::infinity();
    int best_feature = -1;
    double best_threshold = 0.0;
    for (int c = 0; c < cols; ++c) {
      std::vector<double> values(d.x.col(c).data(), d.x.col(c).data() + rows);
      std::sort(values.begin(), values.end());
      for (int k = 0; k + 1 < rows; ++k) {
        if (values[static_cast<std::size_t>(k)] == values[static_cast<std::size_t>(k) + 1]) continue;
        const double t = 0.5 * (values[static_cast<std::size_t>(k)] + values[static_cast<std::size_t>(k) + 1]);
        double sl = 0, sr = 0, nl = 0, nr = 0;
        for (int i = 0; i < rows; ++i) {
          if (d.x(i, c) < t) {
            sl += r[static_cast<std::size_t>(i)];
            nl += 1;
          } else {
            sr += r[static_cast<std::size_t>(i)];
            nr += 1;
          }
        }
        double sse = 0;
        for (int i = 0; i < rows; ++i) {
          const double mean = d.x(i, c) < t ? sl / nl : sr / nr;
          sse += (r[static_cast<std::size_t>(i)] - mean) * (r[static_cast<std::size_t>(i)] - mean);
        }
        if (sse < best_sse - 1e-12) {
          best_sse = sse;
          best_feature = c;
          best_threshold = t;
        }
      }
    }
    const auto& root = model.trees.at(0).nodes.at(0);
    ASSERT_EQ(root.feature, best_feature);
    EXPECT_EQ(root.threshold, best_threshold);

    // Newton leaves: sum(r) / sum(p (1 - p)), clamped.
    for (int side : {root.left, root.right}) {
      const auto& leaf = model.trees[0].nodes.at(static_cast<std::size_t>(side));
      double num = 0, den = 0;
      for (int i = 0; i < rows; ++i) {
        const bool left = d.x(i, best_feature) < best_threshold;
        if (left == (side == root.left)) {
          num += r[static_cast<std::size_t>(i)];
          den += p0 * (1 - p0);
        }
      }
      EXPECT_NEAR(leaf.value, std::clamp(num / (den + 1e-9), -4.0, 4.0), 1e-9);
    }
  });
}

TEST(GbtProperty, DepthAndLeafSizeRespected) {
  for_all_seeds(5, 53, [](Rng& rng, std::uint64_t) {
    const auto d = labelled_data(rng, 80, 4);
    b::GbtConfig cfg;
    cfg.rounds = 10;
    cfg.max_depth = 2;
    cfg.min_leaf = 7;
    const auto model = b::train_gbt(d.x, d.y, cfg);
    std::vector<double> buf;
    for (const auto& tree : model.trees) {
      EXPECT_LE(tree.depth(), 2);
      std::vector<int> count(tree.nodes.size(), 0);
      for (int i = 0; i < d.x.rows(); ++i) {
        int node = 0;
        const auto x = row(d.x, i, buf);
        while (tree.nodes[static_cast<std::size_t>(node)].feature >= 0) {
          const auto& nd = tree.nodes[static_cast<std::size_t>(node)];
          node = x[static_cast<std::size_t>(nd.feature)] < nd.threshold ? nd.left : nd.right;
        }
        ++count[static_cast<std::size_t>(node)];
      }
      for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
        if (tree.nodes[k].feature < 0) EXPECT_GE(count[k], 7);
      }
    }
  });
}

// Binary labels make first-round split scores tie exactly across features, so
// the lowest-feature rule makes column order matter. Extra columns appended after
// the originals can only tie, never win.
TEST(GbtProperty, AppendedRedundantColumnsChangeNothing) {
  for_all_seeds(5, 54, [](Rng& rng, std::uint64_t) {
    const auto d = labelled_data(rng, 50, 4);
    Eigen::MatrixXd wide(d.x.rows(), 6);
    wide.leftCols(4) = d.x;
    wide.col(4) = d.x.col(1);
    wide.col(5).setConstant(3.0);
    b::GbtConfig cfg;
    cfg.rounds = 20;
    const auto a = b::predict_gbt(b::train_gbt(d.x, d.y, cfg), d.x);
    const auto c = b::predict_gbt(b::train_gbt(wide, d.y, cfg), wide);
    EXPECT_EQ(a, c);
  });
}

TEST(GbtProperty, MonotoneFeatureTransformInvariance) {
  for_all_seeds(5, 55, [](Rng& rng, std::uint64_t) {
    const auto d = labelled_data(rng, 50, 3);
    Eigen::MatrixXd warped = d.x;
    for (int i = 0; i < warped.rows(); ++i) {
      for (int c = 0; c < warped.cols(); ++c) warped(i, c) = std::exp(d.x(i, c)) + 3.0 * d.x(i, c);
    }
    b::GbtConfig cfg;
    cfg.rounds = 20;
    const auto a = b::predict_gbt(b::train_gbt(d.x, d.y, cfg), d.x);
    const auto c = b::predict_gbt(b::train_gbt(warped, d.y, cfg), warped);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], c[i], 1e-12);
  });
}

TEST(GbtProperty, SubsamplingIsSeededAndDeterministic) {
  Rng rng(56);
  const auto d = labelled_data(rng, 80, 5);
  b::GbtConfig cfg;
  cfg.rounds = 15;
  cfg.row_subsample = 0.7;
  cfg.column_subsample = 0.6;
  cfg.seed = 9;
  const auto a = b::gbt_to_json(b::train_gbt(d.x, d.y, cfg));
  EXPECT_EQ(a, b::gbt_to_json(b::train_gbt(d.x, d.y, cfg)));
  cfg.seed = 10;
  EXPECT_NE(a, b::gbt_to_json(b::train_gbt(d.x, d.y, cfg)));
}

TEST(GbtIo, JsonRoundTrip) {
  Rng rng(57);
  const auto d = labelled_data(rng, 60, 4);
  b::GbtConfig cfg;
  cfg.rounds = 25;
  const auto model = b::train_gbt(d.x, d.y, cfg);
  const auto text = b::gbt_to_json(model);
  const auto back = b::gbt_from_json(text);
  EXPECT_EQ(back.trees.size(), model.trees.size());
  EXPECT_EQ(b::gbt_to_json(back), text);
  EXPECT_EQ(b::predict_gbt(back, d.x), b::predict_gbt(model, d.x));
  EXPECT_THROW(b::gbt_from_json("{}"), abdoshape::DataError);
  EXPECT_THROW(b::gbt_from_json("[1,"), abdoshape::DataError);
}

TEST(Gbt, LogisticLossValue) {
  const std::vector<double> p{0.5, 0.25};
  const std::vector<int> y{1, 0};
  EXPECT_NEAR(b::logistic_loss(p, y), 0.5 * (std::log(2.0) + std::log(4.0 / 3.0)), 1e-15);
}
