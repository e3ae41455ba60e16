#include <cmath>

#include <gtest/gtest.h>

#include "iadfp/errors.hpp"
#include "iadfp/optimizer.hpp"

using namespace iadfp;

TEST(OptimizerStep, SgdExamples) {
  std::vector<double> theta{1.0};
  MomentState state;
  OptimizerHyper h;
  h.lr = 0.1;
  optimizer_step(OptimizerKind::sgd, theta, std::vector<double>{0.5}, state, h);
  EXPECT_DOUBLE_EQ(theta[0], 0.95);

  theta = {1.0};
  h.weight_decay = 0.1;
  optimizer_step(OptimizerKind::sgd, theta, std::vector<double>{0.0}, state, h);
  EXPECT_DOUBLE_EQ(theta[0], 0.99);
}

TEST(OptimizerStep, AdamFirstStepIsLearningRate) {
  std::vector<double> theta{1.0, -2.0};
  MomentState state;
  OptimizerHyper h;
  h.lr = 0.001;
  optimizer_step(OptimizerKind::adam, theta, std::vector<double>{1.0, -3.0}, state, h);
  // Bias correction makes the first step lr * g / (|g| + eps).
  EXPECT_NEAR(theta[0], 1.0 - 0.001, 1e-10);
  EXPECT_NEAR(theta[1], -2.0 + 0.001, 1e-10);
  EXPECT_EQ(state.step, 1);
}

TEST(OptimizerStep, MomentumAccumulates) {
  std::vector<double> theta{0.0};
  MomentState state;
  OptimizerHyper h;
  h.lr = 0.1;
  h.momentum = 0.5;
  optimizer_step(OptimizerKind::sgd_momentum, theta, std::vector<double>{1.0}, state, h);
  EXPECT_DOUBLE_EQ(theta[0], -0.1);
  optimizer_step(OptimizerKind::sgd_momentum, theta, std::vector<double>{1.0}, state, h);
  EXPECT_DOUBLE_EQ(theta[0], -0.1 - 0.1 * 1.5);
}

TEST(OptimizerStep, SizeMismatchThrows) {
  std::vector<double> theta{1.0, 2.0};
  MomentState state;
  EXPECT_THROW(optimizer_step(OptimizerKind::sgd, theta, std::vector<double>{1.0}, state, {}), ShapeError);
}

TEST(OptimizerKind, Names) {
  for (auto k : {OptimizerKind::sgd, OptimizerKind::sgd_momentum, OptimizerKind::adam}) {
    EXPECT_EQ(parse_optimizer_kind(to_string(k)), k);
  }
  EXPECT_THROW(parse_optimizer_kind("rmsprop"), std::invalid_argument);
}

TEST(Optimizer, SkipsFrozenLayers) {
  NetworkSpec spec = build_network("mlp:4", {3}, 2, HeadKind::softmax);
  spec.layers[0].trainable = false;
  Parameters params = init_parameters(spec, 5);
  Parameters grads = zeros_like(params);
  for (auto& l : grads.layers) {
    for (auto& v : l.weight.values) v = 1.0;
    for (auto& v : l.bias.values) v = 1.0;
  }
  const Parameters before = params;
  Optimizer opt(OptimizerKind::adam, {});
  opt.step(spec, params, grads);
  EXPECT_EQ(params.layers[0], before.layers[0]);
  EXPECT_NE(params.layers[2], before.layers[2]);
}
