#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "deepgroup/adam.hpp"
#include "deepgroup/tensor.hpp"
#include "gradcheck.hpp"
#include "suites.hpp"

namespace deepgroup {
namespace {

using testing::weighted_sum;

TEST(Linear, HandDotProduct) {
  const auto x = Tensor::from({1, 2}, {1, 2});
  const auto w = Tensor::from({1, 2}, {3, 4});
  const auto b = Tensor::from({1}, {5});
  const auto y = linear(x, w, b);
  ASSERT_EQ(y.shape(), (Shape{1, 1}));
  EXPECT_EQ(y.item(), 16.0);
}

TEST(Linear, IdentityWeightPassesInputThrough) {
  const auto x = Tensor::from({2, 3}, {1, -2, 3, 0.5, 6, -7});
  const auto w = Tensor::from({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  const auto y = linear(x, w, Tensor::zeros({3}));
  EXPECT_TRUE(std::ranges::equal(y.values(), x.values()));
}

TEST(Linear, BiasGradientOfSumIsOnes) {
  const auto x = Tensor::from({3, 2}, {1, 2, 3, 4, 5, 6});
  const auto w = Tensor::from({2, 2}, {1, 0, 0, 1});
  auto b = Tensor::zeros({2}, true);
  sum(linear(x, w, b)).backward();
  // Each bias entry feeds one output per row.
  EXPECT_EQ(b.grad()[0], 3.0);
  EXPECT_EQ(b.grad()[1], 3.0);
  const auto per_row = linear(Tensor::from({1, 2}, {1, 1}), w, b = Tensor::zeros({2}, true));
  sum(per_row).backward();
  EXPECT_EQ(b.grad()[0], 1.0);
  EXPECT_EQ(b.grad()[1], 1.0);
}

TEST(Linear, RejectsShapeMismatch) {
  EXPECT_THROW(linear(Tensor::zeros({2, 3}), Tensor::zeros({4, 2}), Tensor::zeros({4})), ShapeError);
  EXPECT_THROW(linear(Tensor::zeros({2, 3}), Tensor::zeros({4, 3}), Tensor::zeros({3})), ShapeError);
  EXPECT_THROW(linear(Tensor::zeros({3}), Tensor::zeros({4, 3}), Tensor::zeros({4})), ShapeError);
}

TEST(Relu, ClampsNegativesAndZero) {
  const auto y = relu(Tensor::from({3}, {-1, 0, 2}));
  EXPECT_EQ(std::vector<double>(y.values().begin(), y.values().end()), (std::vector<double>{0, 0, 2}));
}

TEST(Relu, AllNegativeGivesZeroGradient) {
  auto x = Tensor::from({4}, {-1, -2, -0.1, -9}, true);
  sum(relu(x)).backward();
  for (const double g : x.grad()) EXPECT_EQ(g, 0.0);
  // The subgradient at exactly 0 is 0.
  auto z = Tensor::from({1}, {0.0}, true);
  sum(relu(z)).backward();
  EXPECT_EQ(z.grad()[0], 0.0);
}

TEST(Relu, FiniteDifferenceAtPointThree) {
  auto x = Tensor::from({1}, {0.3}, true);
  sum(relu(x)).backward();
  const double h = 1e-4;
  const double numeric = (std::max(0.3 + h, 0.0) - std::max(0.3 - h, 0.0)) / (2 * h);
  EXPECT_NEAR(x.grad()[0], 1.0, 1e-6);
  EXPECT_NEAR(numeric, 1.0, 1e-6);
}

TEST(Sigmoid, ValuesAndDerivative) {
  auto x = Tensor::from({1}, {0.0}, true);
  const auto y = sigmoid(x);
  EXPECT_EQ(y.item(), 0.5);
  sum(y).backward();
  EXPECT_EQ(x.grad()[0], 0.25);
}

TEST(Sigmoid, StableAtLargeMagnitude) {
  const auto y = sigmoid(Tensor::from({4}, {40, -40, 800, -800}));
  EXPECT_GT(y.at(0), 1.0 - 1e-15);
  EXPECT_LE(y.at(0), 1.0);
  EXPECT_GT(y.at(1), 0.0);
  EXPECT_EQ(y.at(2), 1.0);
  EXPECT_EQ(y.at(3), 0.0);
  for (const double v : y.values()) EXPECT_TRUE(std::isfinite(v));
}

TEST(BceLoss, HalfEverywhereIsLogTwo) {
  const auto p = Tensor::from({4, 1}, {0.5, 0.5, 0.5, 0.5});
  const auto y = Tensor::from({4, 1}, {1, 0, 0, 1});
  EXPECT_NEAR(bce_loss(p, y).item(), std::log(2.0), 1e-12);
}

TEST(BceLoss, PerfectPredictionIsClampFloor) {
  const auto p = Tensor::from({3}, {1, 0, 1});
  const auto y = Tensor::from({3}, {1, 0, 1});
  const double loss = bce_loss(p, y).item();
  EXPECT_LE(loss, -std::log(1.0 - kBceEpsilon) + 1e-15);
  EXPECT_GT(loss, 0.0);
}

TEST(BceLoss, RejectsNonBinaryTargetsAndShapeMismatch) {
  EXPECT_THROW(bce_loss(Tensor::from({2}, {0.4, 0.6}), Tensor::from({2}, {0.5, 1})), std::invalid_argument);
  EXPECT_THROW(bce_loss(Tensor::from({2}, {0.4, 0.6}), Tensor::from({2, 1}, {0, 1})), ShapeError);
}

TEST(BceLoss, LogitGradientIsResidualOverBatch) {
  const std::vector<double> logits{0.3, -1.2, 2.5, 0.0};
  const std::vector<double> targets{1, 0, 0, 1};
  auto z = Tensor::from({4, 1}, logits, true);
  const auto t = Tensor::from({4, 1}, targets);
  const auto yhat = sigmoid(z);
  bce_loss(yhat, t).backward();
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(z.grad()[i], (yhat.at(i) - targets[i]) / 4.0, 1e-12);
    const double h = 1e-4;
    auto at = [&](double v) {
      auto copy = logits;
      copy[i] = v;
      return bce_loss(sigmoid(Tensor::from({4, 1}, copy)), t).item();
    };
    EXPECT_NEAR(z.grad()[i], (at(logits[i] + h) - at(logits[i] - h)) / (2 * h), 1e-6);
  }
}

TEST(Dropout, IdentityWhenKeepingAllOrEvaluating) {
  Rng rng(3);
  const auto x = Tensor::from({3}, {1, 2, 3});
  EXPECT_EQ(dropout(x, 1.0, true, rng).node_ptr(), x.node_ptr());
  EXPECT_EQ(dropout(x, 0.5, false, rng).node_ptr(), x.node_ptr());
  EXPECT_EQ(dropout(x, 1.0, false, rng).node_ptr(), x.node_ptr());
  EXPECT_THROW(dropout(x, 0.0, true, rng), std::invalid_argument);
  EXPECT_THROW(dropout(x, 1.5, true, rng), std::invalid_argument);
}

TEST(Dropout, KeepFractionAndExpectationMonteCarlo) {
  Rng rng(11);
  const std::size_t n = 200'000;
  const auto x = Tensor::from({n}, std::vector<double>(n, 1.0));
  const auto y = dropout(x, 0.8, true, rng);
  std::size_t kept = 0;
  double total = 0.0;
  for (const double v : y.values()) {
    if (v != 0.0) {
      ++kept;
      EXPECT_DOUBLE_EQ(v, 1.25);
    }
    total += v;
  }
  EXPECT_NEAR(static_cast<double>(kept) / n, 0.8, 0.02);
  EXPECT_NEAR(total / n, 1.0, 0.02);
}

TEST(Dropout, BackwardUsesForwardMask) {
  Rng rng(5);
  auto x = Tensor::from({64}, std::vector<double>(64, 2.0), true);
  const auto y = dropout(x, 0.5, true, rng);
  sum(y).backward();
  for (std::size_t i = 0; i < 64; ++i) EXPECT_EQ(x.grad()[i], y.at(i) / 2.0);
}

TEST(ElementwiseReduce, HandExamples) {
  const auto rows = Tensor::from({2, 2}, {1, 3, 3, 5});
  auto vec = [](const Tensor& t) { return std::vector<double>(t.values().begin(), t.values().end()); };
  EXPECT_EQ(vec(elementwise_reduce(rows, ReduceOp::Mean)), (std::vector<double>{2, 4}));
  EXPECT_EQ(vec(elementwise_reduce(rows, ReduceOp::Max)), (std::vector<double>{3, 5}));
  EXPECT_EQ(vec(elementwise_reduce(rows, ReduceOp::Min)), (std::vector<double>{1, 3}));
  EXPECT_EQ(vec(elementwise_reduce(rows, ReduceOp::Median)), (std::vector<double>{1, 3}));  // lower median
}

TEST(ElementwiseReduce, SingleRowIsIdentityForEveryOp) {
  const auto row = Tensor::from({1, 3}, {0.25, -4, 9});
  for (const auto op : {ReduceOp::Mean, ReduceOp::Max, ReduceOp::Min, ReduceOp::Median})
    EXPECT_TRUE(std::ranges::equal(elementwise_reduce(row, op).values(), row.values()));
}

TEST(ElementwiseReduce, TiesRouteGradientToFirstRow) {
  auto rows = Tensor::from({3, 1}, {2, 2, 1}, true);
  sum(elementwise_reduce(rows, ReduceOp::Max)).backward();
  EXPECT_EQ(std::vector<double>(rows.grad().begin(), rows.grad().end()), (std::vector<double>{1, 0, 0}));
}

TEST(ElementwiseReduce, MedianPicksLowerMiddleAndRoutesThere) {
  auto rows = Tensor::from({4, 1}, {7, 1, 5, 3}, true);
  const auto m = elementwise_reduce(rows, ReduceOp::Median);
  EXPECT_EQ(m.item(), 3.0);
  sum(m).backward();
  EXPECT_EQ(std::vector<double>(rows.grad().begin(), rows.grad().end()), (std::vector<double>{0, 0, 0, 1}));
}

TEST(ElementwiseReduce, RejectsEmptyInput) {
  EXPECT_THROW(elementwise_reduce(Tensor::zeros({0, 3}), ReduceOp::Mean), ShapeError);
  EXPECT_THROW(elementwise_reduce(Tensor::zeros({3}), ReduceOp::Mean), ShapeError);
}

TEST(GatherReduce, MatchesPerSegmentElementwiseReduce) {
  Rng rng(2);
  std::vector<double> v(20);
  for (auto& x : v) x = uniform_real(rng);
  const auto table = Tensor::from({5, 4}, v);
  Segments segs;
  segs.add(std::vector<int>{0, 3});
  segs.add(std::vector<int>{1});
  segs.add(std::vector<int>{0, 2, 4});
  for (const auto op : {ReduceOp::Mean, ReduceOp::Max, ReduceOp::Min, ReduceOp::Median}) {
    const auto batched = gather_reduce(table, segs, op);
    ASSERT_EQ(batched.shape(), (Shape{3, 4}));
    for (std::size_t b = 0; b < segs.size(); ++b) {
      const auto single = elementwise_reduce(gather_rows(table, segs[b]), op);
      for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(batched.at(b, c), single.at(c));
    }
  }
}

TEST(GatherReduce, RejectsEmptySegmentAndBadIndex) {
  const auto table = Tensor::zeros({3, 2});
  Segments empty_seg;
  empty_seg.add(std::vector<int>{});
  EXPECT_THROW(gather_reduce(table, empty_seg, ReduceOp::Mean), ShapeError);
  Segments bad;
  bad.add(std::vector<int>{0, 3});
  EXPECT_THROW(gather_reduce(table, bad, ReduceOp::Max), ShapeError);
}

TEST(GatherRows, RepeatedIndicesAccumulateGradient) {
  auto table = Tensor::from({3, 2}, {1, 2, 3, 4, 5, 6}, true);
  const std::vector<int> ids{2, 0, 2};
  const auto g = gather_rows(table, ids);
  EXPECT_EQ(g.at(0, 0), 5.0);
  EXPECT_EQ(g.at(1, 1), 2.0);
  sum(g).backward();
  EXPECT_EQ(std::vector<double>(table.grad().begin(), table.grad().end()), (std::vector<double>{1, 1, 0, 0, 2, 2}));
  EXPECT_THROW(gather_rows(table, std::vector<int>{3}), ShapeError);
}

TEST(ConcatColumns, VectorsAndMatrices) {
  const auto a = Tensor::from({2}, {1, 3});
  const auto b = Tensor::from({2}, {3, 5});
  const auto v = concat_columns({a, b});
  EXPECT_EQ(v.shape(), (Shape{4}));
  const auto m = concat_columns({Tensor::from({2, 1}, {1, 2}), Tensor::from({2, 2}, {3, 4, 5, 6})});
  EXPECT_EQ(std::vector<double>(m.values().begin(), m.values().end()), (std::vector<double>{1, 3, 4, 2, 5, 6}));
  EXPECT_THROW(concat_columns({Tensor::zeros({2, 1}), Tensor::zeros({3, 1})}), ShapeError);
  EXPECT_THROW(concat_columns({Tensor::zeros({2}), Tensor::zeros({2, 1})}), ShapeError);
}

TEST(Backward, SharedSubexpressionAccumulates) {
  auto x = Tensor::from({2}, {1.5, -2}, true);
  const auto r = relu(x);
  // d/dx [sum(r) + sum(r)] = 2 where x > 0.
  const auto both = concat_columns({r, r});
  sum(both).backward();
  EXPECT_EQ(x.grad()[0], 2.0);
  EXPECT_EQ(x.grad()[1], 0.0);
}

TEST(Backward, LeafGradientsAccumulateAcrossPasses) {
  auto x = Tensor::from({1}, {3.0}, true);
  sum(x).backward();
  sum(x).backward();
  EXPECT_EQ(x.grad()[0], 2.0);
  x.zero_grad();
  EXPECT_EQ(x.grad()[0], 0.0);
  EXPECT_THROW(Tensor::from({2}, {1, 2}, true).backward(), ShapeError);
}

TEST(Backward, DeterministicValuesAndGradients) {
  auto run = [] {
    Rng rng(99);
    auto w = Tensor::from({3, 2}, {0.1, -0.4, 0.7, 0.2, -0.3, 0.9}, true);
    const auto x = Tensor::from({2, 2}, {1, 2, -1, 0.5});
    auto y = sum(dropout(relu(linear(x, w, Tensor::zeros({3}))), 0.7, true, rng));
    y.backward();
    return std::pair{y.item(), std::vector<double>(w.grad().begin(), w.grad().end())};
  };
  EXPECT_EQ(run(), run());
}

TEST(Tensor, ConstructionValidatesSize) {
  EXPECT_THROW(Tensor::from({2, 2}, {1, 2, 3}), ShapeError);
  EXPECT_EQ(Tensor::scalar(4.0).item(), 4.0);
  EXPECT_EQ(shape_string({2, 3}), "[2x3]");
  EXPECT_EQ(element_count({}), 1u);
}

TEST(GradientCheck, EveryOperationMatchesCentralDifferences) {
  for (const auto& c : testing::run_gradient_suite(20240611, 100)) {
    SCOPED_TRACE(c.name);
    EXPECT_EQ(c.trials, 100);
    EXPECT_LT(c.worst_error, 1e-4);
  }
}

TEST(Adam, ZeroGradientLeavesParametersAndAdvancesStep) {
  auto w = Tensor::from({2}, {0.5, -1}, true);
  w.mutable_grad();
  AdamState state;
  std::vector<Tensor> params{w};
  adam_step(params, state);
  EXPECT_EQ(state.step, 1);
  EXPECT_EQ(w.at(0), 0.5);
  EXPECT_EQ(w.at(1), -1.0);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  auto w = Tensor::from({1}, {2.0}, true);
  w.mutable_grad()[0] = 3.7;
  AdamState state;
  std::vector<Tensor> params{w};
  adam_step(params, state);
  EXPECT_NEAR(2.0 - w.at(0), state.learning_rate, 1e-9);
  EXPECT_EQ(w.grad()[0], 0.0);
}

TEST(Adam, QuadraticBowlConverges) {
  auto w = Tensor::from({1}, {1.0}, true);
  AdamState state;
  std::vector<Tensor> params{w};
  for (int i = 0; i < 500; ++i) {
    w.mutable_grad()[0] = 2.0 * w.at(0);
    adam_step(params, state);
  }
  EXPECT_LT(std::abs(w.at(0)), 0.6);  // lr 0.001 bounds travel to ~0.5 in 500 steps
  for (int i = 0; i < 1500; ++i) {
    w.mutable_grad()[0] = 2.0 * w.at(0);
    adam_step(params, state);
  }
  EXPECT_LT(std::abs(w.at(0)), 0.1);
}

TEST(Adam, MissingGradientThrows) {
  AdamState state;
  std::vector<Tensor> params{Tensor::from({1}, {1.0}, true)};
  EXPECT_THROW(adam_step(params, state), std::invalid_argument);
}

}  // namespace
}  // namespace deepgroup
