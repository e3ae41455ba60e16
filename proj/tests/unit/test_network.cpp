#include <cmath>

#include <gtest/gtest.h>

#include "iadfp/errors.hpp"
#include "iadfp/network.hpp"
#include "iadfp/training.hpp"

using namespace iadfp;

namespace {

Tensor random_tensor(Rng& rng, Shape shape) {
  Tensor t(std::move(shape));
  for (auto& v : t.values) v = rng.normal();
  return t;
}

// Small random biases keep relu inputs away from the kink, where central
// differences straddle a corner and disagree with the one-sided derivative.
void jitter_biases(Parameters& params, Rng& rng) {
  for (auto& l : params.layers) {
    for (auto& b : l.bias.values) b = 0.1 * rng.normal();
  }
}

std::vector<int> random_labels(Rng& rng, std::size_t n, std::size_t k) {
  std::vector<int> labels(n);
  for (auto& l : labels) l = static_cast<int>(rng.below(k));
  return labels;
}

}  // namespace

TEST(BuildNetwork, MlpLayout) {
  const auto spec = build_network("mlp:64-32", {10}, 3, HeadKind::dirichlet);
  ASSERT_EQ(spec.layers.size(), 6u);
  EXPECT_EQ(spec.layers[0], LayerSpec::dense(10, 64));
  EXPECT_EQ(spec.layers[1].kind, LayerKind::relu);
  EXPECT_EQ(spec.layers[2], LayerSpec::dense(64, 32));
  EXPECT_EQ(spec.layers[4], LayerSpec::dense(32, 3));
  EXPECT_EQ(spec.layers[5].kind, LayerKind::softplus_plus_one);
  EXPECT_EQ(spec.head(), HeadKind::dirichlet);
  EXPECT_EQ(spec.output_size(), 3u);
}

TEST(BuildNetwork, LenetLayout) {
  const auto spec = build_network("lenet:20{5}-50{5}-500", {1, 28, 28}, 10, HeadKind::softmax);
  const auto shapes = spec.layer_shapes();
  EXPECT_EQ(spec.layers[0], LayerSpec::conv2d(1, 20, 5));
  EXPECT_EQ(shapes[3], (Shape{20, 12, 12}));
  EXPECT_EQ(shapes[6], (Shape{50, 4, 4}));
  EXPECT_EQ(spec.layers[6].kind, LayerKind::flatten);
  EXPECT_EQ(spec.layers[7], LayerSpec::dense(800, 500));
  EXPECT_EQ(spec.layers.back().kind, LayerKind::softmax_ce_head);
}

TEST(BuildNetwork, EmptyMlpIsLinear) {
  const auto spec = build_network("mlp:", {6}, 3, HeadKind::softmax);
  ASSERT_EQ(spec.layers.size(), 2u);
  EXPECT_EQ(spec.layers[0], LayerSpec::dense(6, 3));
}

TEST(BuildNetwork, RejectsMalformedStrings) {
  for (const char* bad : {"lenet:20{0}", "lenet:20{5", "mlp:3{3}", "mlp:0", "resnet:5", "lenet:20{30}", "mlp:4--4"}) {
    EXPECT_THROW(build_network(bad, {1, 28, 28}, 10, HeadKind::dirichlet), std::invalid_argument) << bad;
  }
  EXPECT_THROW(build_network("lenet:4{3}", {16}, 10, HeadKind::dirichlet), std::invalid_argument);
}

TEST(NetworkSpec, ValidateRequiresSingleTrailingHead) {
  NetworkSpec spec{{4}, {LayerSpec::dense(4, 2), LayerSpec::of(LayerKind::relu)}};
  EXPECT_THROW(spec.validate(), ShapeError);
  spec.layers = {LayerSpec::dense(4, 2), LayerSpec::of(LayerKind::softplus_plus_one), LayerSpec::of(LayerKind::softmax_ce_head)};
  EXPECT_THROW(spec.validate(), ShapeError);
  // A sigmoid may also serve as an inner activation.
  spec.layers = {LayerSpec::dense(4, 2), LayerSpec::of(LayerKind::sigmoid), LayerSpec::of(LayerKind::softmax_ce_head)};
  EXPECT_NO_THROW(spec.validate());
  spec.layers = {LayerSpec::dense(3, 2), LayerSpec::of(LayerKind::softmax_ce_head)};
  EXPECT_THROW(spec.validate(), ShapeError);
}

TEST(Forward, ZeroWeightDirichletHead) {
  const auto spec = build_network("mlp:4", {3}, 5, HeadKind::dirichlet);
  const auto params = zeros_like(init_parameters(spec, 1));
  Rng rng(2);
  const auto out = forward(spec, params, random_tensor(rng, {2, 3})).output();
  for (double a : out.values) EXPECT_NEAR(a, 1.0 + std::log(2.0), 1e-15);
}

TEST(Forward, ZeroWeightSigmoidHead) {
  const NetworkSpec spec{{3}, {LayerSpec::dense(3, 1), LayerSpec::of(LayerKind::sigmoid)}};
  const auto params = zeros_like(init_parameters(spec, 1));
  Rng rng(3);
  const auto out = forward(spec, params, random_tensor(rng, {4, 3})).output();
  for (double c : out.values) EXPECT_DOUBLE_EQ(c, 0.5);
}

TEST(Forward, AffineHandComputed) {
  const NetworkSpec spec{{2}, {LayerSpec::dense(2, 1), LayerSpec::of(LayerKind::sigmoid)}};
  Parameters params = init_parameters(spec, 1);
  params.layers[0].weight.values = {2.0, -1.0};
  params.layers[0].bias.values = {0.5};
  const auto cache = forward(spec, params, Tensor({1, 2}, {3.0, 4.0}));
  EXPECT_DOUBLE_EQ(cache.head_input()[0], 2.5);
  EXPECT_NEAR(cache.output()[0], 1.0 / (1.0 + std::exp(-2.5)), 1e-15);
}

TEST(Forward, BatchShapeMismatchThrows) {
  const auto spec = build_network("mlp:4", {3}, 2, HeadKind::dirichlet);
  const auto params = init_parameters(spec, 1);
  EXPECT_THROW(forward(spec, params, Tensor({2, 4})), ShapeError);
}

TEST(NetworkProperty, DirichletOutputsAtLeastOne) {
  Rng rng(4);
  const auto spec = build_network("mlp:16-16", {6}, 4, HeadKind::dirichlet);
  for (int t = 0; t < 50; ++t) {
    auto params = init_parameters(spec, 100 + t);
    for (auto& l : params.layers)
      for (auto& w : l.weight.values) w *= 10.0;
    const auto out = predict(spec, params, random_tensor(rng, {32, 6}));
    for (double a : out.values) EXPECT_GE(a, 1.0);
  }
}

TEST(NetworkProperty, ForwardBitIdentical) {
  Rng rng(5);
  const auto spec = build_network("lenet:3{3}-8", {1, 10, 10}, 3, HeadKind::dirichlet);
  const auto params = init_parameters(spec, 9);
  const auto x = random_tensor(rng, {5, 1, 10, 10});
  EXPECT_EQ(forward(spec, params, x).output().values, forward(spec, params, x).output().values);
  EXPECT_EQ(init_parameters(spec, 9), params);
  EXPECT_NE(init_parameters(spec, 10), params);
}

TEST(Backward, SoftplusHeadLocalDerivative) {
  const NetworkSpec spec{{2}, {LayerSpec::dense(2, 2), LayerSpec::of(LayerKind::softplus_plus_one)}};
  const auto params = zeros_like(init_parameters(spec, 1));
  const Tensor x({1, 2}, {1.0, -2.0});
  const auto cache = forward(spec, params, x);
  const auto g = backward(spec, params, cache, Tensor({1, 2}, {1.0, 0.0}));
  // d alpha_0 / d b_0 = sigma(0)
  EXPECT_DOUBLE_EQ(g.params.layers[0].bias[0], 0.5);
  EXPECT_DOUBLE_EQ(g.params.layers[0].bias[1], 0.0);
  EXPECT_DOUBLE_EQ(g.params.layers[0].weight[0], 0.5);
  EXPECT_DOUBLE_EQ(g.params.layers[0].weight[1], -1.0);
}

TEST(Backward, FrozenLayersGetZeroGradient) {
  Rng rng(6);
  auto spec = build_network("mlp:8-8", {4}, 3, HeadKind::dirichlet);
  spec.layers[0].trainable = false;
  auto params = init_parameters(spec, 2);
  const auto x = random_tensor(rng, {6, 4});
  const auto cache = forward(spec, params, x);
  const auto g = backward(spec, params, cache, random_tensor(rng, {6, 3}));
  for (double v : g.params.layers[0].weight.values) EXPECT_EQ(v, 0.0);
  for (double v : g.params.layers[0].bias.values) EXPECT_EQ(v, 0.0);
  double other = 0.0;
  for (double v : g.params.layers[2].weight.values) other += std::abs(v);
  EXPECT_GT(other, 0.0);
}

TEST(Gradcheck, TwoLayerDenseRelu) {
  Rng rng(7);
  const auto spec = build_network("mlp:5-4", {3}, 3, HeadKind::dirichlet);
  auto params = init_parameters(spec, 3);
  jitter_biases(params, rng);
  const auto x = random_tensor(rng, {4, 3});
  const auto labels = random_labels(rng, 4, 3);
  IadLossConfig cfg;
  const auto report = gradcheck(
      spec, params, [&](const ForwardCache& c) { return iad_head_loss(c, labels, cfg, 10.0); }, x, 1e-4);
  EXPECT_TRUE(report.passed) << report.max_rel_error;
  EXPECT_GT(report.checked, 0u);
}

TEST(Gradcheck, IadThroughSmallLenet) {
  Rng rng(8);
  const auto spec = build_network("lenet:3{3}-4{3}-8", {1, 12, 12}, 4, HeadKind::dirichlet);
  auto params = init_parameters(spec, 4);
  jitter_biases(params, rng);
  const auto x = random_tensor(rng, {4, 1, 12, 12});
  const auto labels = random_labels(rng, 4, 4);
  IadLossConfig cfg;
  const auto report = gradcheck(
      spec, params, [&](const ForwardCache& c) { return iad_head_loss(c, labels, cfg, 10.0); }, x, 1e-4);
  EXPECT_TRUE(report.passed) << report.max_rel_error;
}

TEST(Gradcheck, SoftmaxCrossEntropy) {
  Rng rng(9);
  const auto spec = build_network("mlp:6", {5}, 4, HeadKind::softmax);
  auto params = init_parameters(spec, 5);
  jitter_biases(params, rng);
  const auto x = random_tensor(rng, {4, 5});
  const auto labels = random_labels(rng, 4, 4);
  const auto report = gradcheck(
      spec, params, [&](const ForwardCache& c) { return ce_head_loss(c, labels); }, x, 1e-5);
  EXPECT_TRUE(report.passed) << report.max_rel_error;
}

TEST(Gradcheck, ConfidenceHead) {
  Rng rng(10);
  const auto classifier = build_network("mlp:6-6", {5}, 3, HeadKind::dirichlet);
  auto net = build_confidence_net(classifier, init_parameters(classifier, 6), 7, 11);
  jitter_biases(net.params, rng);
  for (auto& v : net.params.layers[net.spec.layers.size() - 2].weight.values) v = 0.3 * rng.normal();
  const auto x = random_tensor(rng, {4, 5});
  std::vector<ConfidenceTarget> targets;
  for (int i = 0; i < 4; ++i) targets.push_back({rng.uniform(), rng.below(2) == 1});
  ConfidenceConfig cfg;
  cfg.k = 3;
  cfg.m = 5.0;
  const auto report = gradcheck(
      net.spec, net.params, [&](const ForwardCache& c) { return confidence_head_loss(c, targets, cfg); }, x, 1e-4);
  EXPECT_TRUE(report.passed) << report.max_rel_error;
}
