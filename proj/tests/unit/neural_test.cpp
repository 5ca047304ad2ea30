#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>

#include <gtest/gtest.h>

#include "abdoshape/error.hpp"
#include "abdoshape/neural/adam.hpp"
#include "abdoshape/neural/checkpoint.hpp"
#include "abdoshape/neural/grad_check.hpp"
#include "abdoshape/neural/parameters.hpp"
#include "abdoshape/neural/tensor.hpp"
#include "property.hpp"

namespace n = abdoshape::neural;
using abdoshape::Rng;
using abdoshape::testing::for_all_seeds;

namespace {

n::Tensor random_tensor(Rng& rng, n::Shape shape, double sd = 1.0) {
  auto t = n::Tensor::zeros(std::move(shape));
  for (auto& v : t.values) v = rng.normal(0.0, sd);
  return t;
}

using Builder = std::function<n::Var(n::Tape&, const std::vector<n::Var>&)>;

// Wraps a graph as a scalar function of its concatenated inputs. The output is
// contracted with fixed random weights so every output entry matters.
n::ScalarFunction as_scalar(const std::vector<n::Shape>& shapes, const Builder& build, std::uint64_t seed) {
  return [shapes, build, seed](std::span<const double> x, std::span<double> grad) {
    n::Tape tape;
    std::vector<n::Var> inputs;
    std::size_t offset = 0;
    for (const auto& s : shapes) {
      const auto count = n::element_count(s);
      inputs.push_back(tape.leaf(n::Tensor(s, std::vector<double>(x.begin() + offset, x.begin() + offset + count)),
                                 true));
      offset += count;
    }
    const n::Var out = build(tape, inputs);
    Rng rng(seed);
    const n::Var w = tape.leaf(random_tensor(rng, out.shape()));
    const n::Var loss = n::sum(n::mul(out, w));
    if (!grad.empty()) {
      tape.backward(loss);
      offset = 0;
      for (const auto& in : inputs) {
        const auto g = tape.grad(in);
        std::copy(g.values.begin(), g.values.end(), grad.begin() + offset);
        offset += g.size();
      }
    }
    return loss.value()[0];
  };
}

std::vector<double> random_point(Rng& rng, const std::vector<n::Shape>& shapes) {
  std::vector<double> x;
  for (const auto& s : shapes) {
    for (std::size_t i = 0; i < n::element_count(s); ++i) x.push_back(rng.normal());
  }
  return x;
}

}  // namespace

TEST(Ops, ReluDefinition) {
  n::Tape tape;
  const auto y = n::relu(tape.leaf(n::Tensor::vector({-1, 0, 2})));
  EXPECT_EQ(y.value().values, (std::vector<double>{0, 0, 2}));
}

TEST(Ops, MatmulByHand) {
  n::Tape tape;
  const auto a = tape.leaf(n::Tensor::matrix({{1, 2, 3}, {4, 5, 6}}));
  const auto b = tape.leaf(n::Tensor::matrix({{7, 8}, {9, 10}, {11, 12}}));
  const auto c = n::matmul(a, b);
  EXPECT_EQ(c.shape(), (n::Shape{2, 2}));
  EXPECT_EQ(c.value().values, (std::vector<double>{58, 64, 139, 154}));
}

TEST(Ops, ShapeMismatchNamesBothShapes) {
  n::Tape tape;
  const auto a = tape.leaf(n::Tensor::zeros({2, 3}));
  const auto b = tape.leaf(n::Tensor::zeros({2, 3}));
  try {
    n::matmul(a, b);
    FAIL() << "expected InvalidArgument";
  } catch (const abdoshape::InvalidArgument& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2, 3]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("matmul"), std::string::npos) << msg;
  }
  EXPECT_THROW(n::add(a, tape.leaf(n::Tensor::zeros({3, 2}))), abdoshape::InvalidArgument);
  EXPECT_THROW(n::concat(a, tape.leaf(n::Tensor::zeros({3, 2})), 1), abdoshape::InvalidArgument);
}

TEST(Ops, MaxOverPointsSelectsDominantRow) {
  n::Tape tape;
  const auto x = tape.leaf(n::Tensor::matrix({{1, 2}, {5, 6}, {3, 4}}), true);
  const auto m = n::max_over_points(x);
  EXPECT_EQ(m.shape(), (n::Shape{1, 2}));
  EXPECT_EQ(m.value().values, (std::vector<double>{5, 6}));
  tape.backward(n::sum(m));
  EXPECT_EQ(tape.grad(x).values, (std::vector<double>{0, 0, 1, 1, 0, 0}));
}

TEST(Ops, MaxOverPointsTiesGoToLowestRow) {
  n::Tape tape;
  const auto x = tape.leaf(n::Tensor::matrix({{1, 7}, {3, 7}, {3, 2}}), true);
  tape.backward(n::sum(n::max_over_points(x)));
  EXPECT_EQ(tape.grad(x).values, (std::vector<double>{0, 1, 1, 0, 0, 0}));
}

TEST(OpsProperty, MaxOverPointsPermutationInvariant) {
  for_all_seeds(20, 31, [](Rng& rng, std::uint64_t) {
    const std::size_t rows = 5 + rng.below(40);
    const auto t = random_tensor(rng, {rows, 7});
    std::vector<std::size_t> perm(rows);
    for (std::size_t i = 0; i < rows; ++i) perm[i] = i;
    rng.shuffle(std::span<std::size_t>(perm));
    auto p = t;
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t c = 0; c < 7; ++c) p(i, c) = t(perm[i], c);
    }
    n::Tape tape;
    const n::Tensor a = n::max_over_points(tape.leaf(t)).value();
    const n::Tensor b = n::max_over_points(tape.leaf(p)).value();
    EXPECT_EQ(a.values, b.values);
  });
}

TEST(Ops, SoftmaxCrossEntropyValue) {
  n::Tape tape;
  const auto z = tape.leaf(n::Tensor::matrix({{1.0, 3.0}}), true);
  const auto loss = n::softmax_cross_entropy(z, 1);
  EXPECT_NEAR(loss.value()[0], std::log(1.0 + std::exp(-2.0)), 1e-15);
  tape.backward(loss);
  const double p1 = 1.0 / (1.0 + std::exp(-2.0));
  EXPECT_NEAR(tape.grad(z)[0], 1.0 - p1, 1e-15);
  EXPECT_NEAR(tape.grad(z)[1], p1 - 1.0, 1e-15);
  EXPECT_THROW(n::softmax_cross_entropy(z, 2), abdoshape::InvalidArgument);
}

TEST(Ops, SoftmaxIsStable) {
  const auto p = n::softmax({1000.0, 1000.0});
  EXPECT_EQ(p[0], 0.5);
  const auto q = n::softmax({-800.0, 800.0});
  EXPECT_NEAR(q[1], 1.0, 1e-15);
}

TEST(Ops, BatchMatmulAppliesTransposedTransform) {
  n::Tape tape;
  const auto p = tape.leaf(n::Tensor::matrix({{1, 0, 0}, {0, 1, 0}, {1, 2, 3}}));
  const auto t = tape.leaf(n::Tensor::matrix({{0, -1, 0}, {1, 0, 0}, {0, 0, 2}}));
  const auto y = n::batch_matmul(p, t);
  EXPECT_EQ(y.shape(), (n::Shape{3, 3}));
  // Row i is T * p_i.
  EXPECT_EQ(y.value().values, (std::vector<double>{0, 1, 0, -1, 0, 0, -2, 1, 6}));
}

TEST(Ops, ConcatBothAxes) {
  n::Tape tape;
  const auto a = tape.leaf(n::Tensor::matrix({{1, 2}}));
  const auto b = tape.leaf(n::Tensor::matrix({{3, 4}}));
  EXPECT_EQ(n::concat(a, b, 1).value().values, (std::vector<double>{1, 2, 3, 4}));
  EXPECT_EQ(n::concat(a, b, 0).shape(), (n::Shape{2, 2}));
}

TEST(Backward, SumOfSquares) {
  n::Tape tape;
  const auto x = tape.leaf(n::Tensor::vector({1.5, -2.0, 0.25}), true);
  tape.backward(n::sum(n::mul(x, x)));
  EXPECT_EQ(tape.grad(x).values, (std::vector<double>{3.0, -4.0, 0.5}));
}

TEST(Backward, ReluPiecewise) {
  n::Tape tape;
  const auto x = tape.leaf(n::Tensor::vector({-1.0, 2.0}), true);
  tape.backward(n::sum(n::relu(x)));
  EXPECT_EQ(tape.grad(x).values, (std::vector<double>{0.0, 1.0}));
}

TEST(Backward, NonScalarLossRejected) {
  n::Tape tape;
  const auto x = tape.leaf(n::Tensor::vector({1.0, 2.0}), true);
  EXPECT_THROW(tape.backward(n::relu(x)), abdoshape::InvalidArgument);
}

TEST(Backward, UnusedParameterGetsZeroGradient) {
  n::Tape tape;
  const auto x = tape.leaf(n::Tensor::vector({1.0, 2.0}), true);
  const auto unused = tape.leaf(n::Tensor::vector({3.0}), true);
  tape.backward(n::sum(x));
  EXPECT_EQ(tape.grad(unused).values, (std::vector<double>{0.0}));
}

TEST(Backward, NonFiniteValuesRaise) {
  n::Tape tape;
  const auto x = tape.leaf(n::Tensor::vector({1e300}));
  EXPECT_THROW(n::scale(x, 1e300), abdoshape::NumericalError);
  EXPECT_THROW(tape.leaf(n::Tensor::vector({std::numeric_limits<double>::quiet_NaN()})), abdoshape::NumericalError);
}

TEST(BackwardProperty, OpsMatchFiniteDifferences) {
  const std::vector<std::pair<std::vector<n::Shape>, Builder>> cases = {
      {{{4, 3}, {3, 5}}, [](n::Tape&, const std::vector<n::Var>& v) { return n::matmul(v[0], v[1]); }},
      {{{4, 3}, {3}}, [](n::Tape&, const std::vector<n::Var>& v) { return n::add_broadcast(v[0], v[1]); }},
      {{{4, 3}, {1, 3}}, [](n::Tape&, const std::vector<n::Var>& v) { return n::mul_broadcast(v[0], v[1]); }},
      {{{4, 3}, {4, 3}}, [](n::Tape&, const std::vector<n::Var>& v) { return n::mul(v[0], v[1]); }},
      {{{6, 3}, {3, 3}}, [](n::Tape&, const std::vector<n::Var>& v) { return n::batch_matmul(v[0], v[1]); }},
      {{{2, 3}, {4, 3}}, [](n::Tape&, const std::vector<n::Var>& v) { return n::concat(v[0], v[1], 0); }},
      {{{2, 3}, {2, 5}}, [](n::Tape&, const std::vector<n::Var>& v) { return n::concat(v[0], v[1], 1); }},
      {{{1, 9}}, [](n::Tape&, const std::vector<n::Var>& v) { return n::reshape(v[0], {3, 3}); }},
      {{{8, 4}}, [](n::Tape&, const std::vector<n::Var>& v) { return n::max_over_points(v[0]); }},
      {{{1, 2}}, [](n::Tape&, const std::vector<n::Var>& v) { return n::softmax_cross_entropy(v[0], 1); }},
      {{{3, 3}}, [](n::Tape&, const std::vector<n::Var>& v) { return n::scale(v[0], -2.5); }},
  };
  for_all_seeds(3, 32, [&](Rng& rng, std::uint64_t seed) {
    for (std::size_t c = 0; c < cases.size(); ++c) {
      const auto& [shapes, build] = cases[c];
      const auto x = random_point(rng, shapes);
      EXPECT_LE(n::grad_check(as_scalar(shapes, build, seed), x), 1e-7) << "case " << c;
    }
  });
}

TEST(BackwardProperty, TwoLayerPerceptron) {
  const std::vector<n::Shape> shapes{{5, 4}, {4, 6}, {6}, {6, 2}, {2}};
  const Builder mlp = [](n::Tape&, const std::vector<n::Var>& v) {
    const auto h = n::relu(n::add_broadcast(n::matmul(v[0], v[1]), v[2]));
    return n::add_broadcast(n::matmul(h, v[3]), v[4]);
  };
  for_all_seeds(10, 33, [&](Rng& rng, std::uint64_t seed) {
    const auto x = random_point(rng, shapes);
    EXPECT_LE(n::grad_check(as_scalar(shapes, mlp, seed), x), 1e-4);
  });
}

TEST(GradCheck, QuadraticForm) {
  const n::ScalarFunction f = [](std::span<const double> x, std::span<double> g) {
    // f = x0^2 + 3 x0 x1 + 2 x1^2
    if (!g.empty()) {
      g[0] = 2 * x[0] + 3 * x[1];
      g[1] = 3 * x[0] + 4 * x[1];
    }
    return x[0] * x[0] + 3 * x[0] * x[1] + 2 * x[1] * x[1];
  };
  const std::vector<double> p{0.7, -1.3};
  EXPECT_LE(n::grad_check(f, p, 1e-5), 1e-9);
}

TEST(GradCheck, LinearIsExact) {
  const n::ScalarFunction f = [](std::span<const double> x, std::span<double> g) {
    if (!g.empty()) {
      g[0] = 2.0;
      g[1] = -0.5;
    }
    return 2.0 * x[0] - 0.5 * x[1];
  };
  const std::vector<double> p{0.25, 0.5};
  // A dyadic step keeps the central difference free of rounding.
  EXPECT_LE(n::grad_check(f, p, 0x1p-16), 1e-12);
}

TEST(GradCheck, KinkIsReported) {
  const n::ScalarFunction f = [](std::span<const double> x, std::span<double> g) {
    if (!g.empty()) g[0] = x[0] > 0 ? 1.0 : 0.0;
    return std::max(0.0, x[0]);
  };
  const std::vector<double> p{0.0};
  EXPECT_GE(n::grad_check(f, p, 1e-5), 0.4);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  std::vector<n::Tensor> params{n::Tensor::vector({1.0, -2.0})};
  const std::vector<n::Tensor> grads{n::Tensor::vector({0.0, 0.0})};
  auto state = n::make_adam_state(params);
  n::adam_step(params, grads, state);
  EXPECT_EQ(params[0].values, (std::vector<double>{1.0, -2.0}));
  EXPECT_EQ(state.step, 1);
}

TEST(Adam, FirstStepClosedForm) {
  // m = (1-b1) g, v = (1-b2) g^2; bias correction gives m_hat = g, v_hat = g^2,
  // so the step is lr * g / (|g| + eps).
  std::vector<n::Tensor> params{n::Tensor::vector({0.5, 0.5})};
  const std::vector<n::Tensor> grads{n::Tensor::vector({3.0, -1e-3})};
  n::AdamConfig cfg;
  cfg.learning_rate = 0.01;
  auto state = n::make_adam_state(params, cfg);
  n::adam_step(params, grads, state);
  EXPECT_NEAR(params[0][0], 0.5 - 0.01 * 3.0 / (3.0 + 1e-8), 1e-15);
  EXPECT_NEAR(params[0][1], 0.5 + 0.01 * 1e-3 / (1e-3 + 1e-8), 1e-15);
}

TEST(Adam, DeterministicTrajectories) {
  auto run = [] {
    Rng rng(4);
    std::vector<n::Tensor> params{random_tensor(rng, {3, 3})};
    auto state = n::make_adam_state(params);
    for (int i = 0; i < 50; ++i) n::adam_step(params, std::vector<n::Tensor>{random_tensor(rng, {3, 3})}, state);
    return params[0];
  };
  EXPECT_EQ(run(), run());
}

TEST(Adam, ShapeMismatchRejected) {
  std::vector<n::Tensor> params{n::Tensor::vector({1.0})};
  auto state = n::make_adam_state(params);
  EXPECT_THROW(n::adam_step(params, std::vector<n::Tensor>{n::Tensor::vector({1.0, 2.0})}, state),
               abdoshape::InvalidArgument);
}

TEST(Checkpoint, RoundTripIsBitwise) {
  Rng rng(8);
  n::ParameterStore store;
  store.add("a.weight", random_tensor(rng, {3, 4}));
  store.add("a.bias", random_tensor(rng, {4}));
  store.add("scalar", n::Tensor({1}, {std::numeric_limits<double>::denorm_min()}));
  const auto bytes = n::encode_checkpoint(store);
  EXPECT_EQ(bytes.substr(0, 4), "TNSR");
  EXPECT_EQ(n::decode_checkpoint(bytes), store);
  const auto dir = std::filesystem::temp_directory_path() / "abdoshape_neural_ckpt";
  std::filesystem::create_directories(dir);
  n::write_checkpoint(dir / "m.tnsr", store);
  EXPECT_EQ(n::read_checkpoint(dir / "m.tnsr"), store);
}

TEST(Checkpoint, CorruptInputRejected) {
  n::ParameterStore store;
  store.add("w", n::Tensor::vector({1.0, 2.0}));
  auto bytes = n::encode_checkpoint(store);
  EXPECT_THROW(n::decode_checkpoint("TNSX" + bytes.substr(4)), abdoshape::DataError);
  EXPECT_THROW(n::decode_checkpoint(bytes.substr(0, bytes.size() - 3)), abdoshape::DataError);
  EXPECT_THROW(n::decode_checkpoint(bytes + "x"), abdoshape::DataError);
}

TEST(Parameters, DuplicateNamesRejected) {
  n::ParameterStore store;
  store.add("w", n::Tensor::vector({1.0}));
  EXPECT_THROW(store.add("w", n::Tensor::vector({2.0})), abdoshape::InvalidArgument);
  EXPECT_EQ(store.find("w"), 0u);
  EXPECT_FALSE(store.find("v").has_value());
}
