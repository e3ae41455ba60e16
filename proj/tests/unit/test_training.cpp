#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "iadfp/data_io.hpp"
#include "iadfp/training.hpp"

using namespace iadfp;

namespace {

Dataset separable_blobs(std::uint64_t seed) {
  SyntheticSpec s;
  s.classes = 2;
  s.dim = 4;
  s.separation = 10.0;
  s.per_class = 100;
  s.seed = seed;
  return synthetic_blobs(s);
}

double accuracy(const NetworkSpec& spec, const Parameters& params, const Dataset& data) {
  const auto out = predict(spec, params, data.features);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto row = out.row(i);
    const auto arg = std::max_element(row.begin(), row.end()) - row.begin();
    hits += arg == data.labels[i];
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

TrainConfig quick_config(LossKind loss, std::size_t epochs) {
  TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = 16;
  cfg.learning_rate = 3e-3;
  cfg.loss = loss;
  cfg.seed = 17;
  cfg.iad.t0 = 1;
  cfg.iad.t_ramp = 2;
  return cfg;
}

}  // namespace

TEST(TrainClassifier, IadSeparatesSeparableBlobs) {
  const auto data = separable_blobs(1);
  const auto spec = build_network("mlp:16", data.example_shape(), 2, HeadKind::dirichlet);
  const auto result = train_classifier(spec, init_parameters(spec, 1), data, nullptr, quick_config(LossKind::iad, 30));
  EXPECT_GE(accuracy(spec, result.params, data), 0.99);
  ASSERT_EQ(result.log.epochs.size(), 30u);
  EXPECT_EQ(result.log.epochs.front().epoch, 1u);
  EXPECT_TRUE(std::isnan(result.log.epochs.front().validation_accuracy));
}

TEST(TrainClassifier, CrossEntropySeparatesSeparableBlobs) {
  const auto data = separable_blobs(2);
  const auto spec = build_network("mlp:16", data.example_shape(), 2, HeadKind::softmax);
  const auto result =
      train_classifier(spec, init_parameters(spec, 1), data, nullptr, quick_config(LossKind::softmax_ce, 30));
  EXPECT_GE(accuracy(spec, result.params, data), 0.99);
}

TEST(TrainClassifier, AnnealingStartsAtEpochOne) {
  const auto data = separable_blobs(3);
  const auto spec = build_network("mlp:8", data.example_shape(), 2, HeadKind::dirichlet);
  auto cfg = quick_config(LossKind::iad, 5);
  cfg.iad.lambda = 0.4;
  cfg.iad.t0 = 1;
  cfg.iad.t_ramp = 2;
  const auto log = train_classifier(spec, init_parameters(spec, 1), data, &data, cfg).log;
  const std::vector<double> want{0.0, 0.2, 0.4, 0.4, 0.4};
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(log.epochs[i].epoch, i + 1);
    EXPECT_NEAR(log.epochs[i].lambda_t, want[i], 1e-15);
    EXPECT_FALSE(std::isnan(log.epochs[i].validation_accuracy));
  }
}

TEST(TrainClassifier, DeterministicForSeed) {
  const auto data = separable_blobs(4);
  const auto spec = build_network("mlp:8", data.example_shape(), 2, HeadKind::dirichlet);
  const auto cfg = quick_config(LossKind::iad, 3);
  const auto a = train_classifier(spec, init_parameters(spec, 1), data, nullptr, cfg);
  const auto b = train_classifier(spec, init_parameters(spec, 1), data, nullptr, cfg);
  EXPECT_EQ(a.params, b.params);
}

TEST(TrainClassifier, RejectsMismatchedHead) {
  const auto data = separable_blobs(5);
  const auto spec = build_network("mlp:8", data.example_shape(), 3, HeadKind::dirichlet);
  EXPECT_ANY_THROW(train_classifier(spec, init_parameters(spec, 1), data, nullptr, quick_config(LossKind::iad, 1)));
}

TEST(TrainConfig, Validation) {
  TrainConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.epochs = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.learning_rate = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(BuildConfidenceNet, LenetFreezesConvFeatures) {
  const auto classifier = build_network("lenet:20{5}-50{5}-500", {1, 28, 28}, 10, HeadKind::dirichlet);
  const auto params = init_parameters(classifier, 1);
  const auto net = build_confidence_net(classifier, params, 600, 2);
  // conv, relu, pool, conv, relu, pool, flatten
  ASSERT_EQ(net.frozen_prefix, 7u);
  std::size_t new_dense = 0;
  for (std::size_t i = 0; i < net.spec.layers.size(); ++i) {
    const auto& l = net.spec.layers[i];
    if (i < net.frozen_prefix) {
      EXPECT_FALSE(l.trainable);
      if (l.has_parameters()) EXPECT_EQ(net.params.layers[i], params.layers[i]);
    } else {
      EXPECT_TRUE(l.trainable);
      new_dense += l.kind == LayerKind::dense;
    }
  }
  EXPECT_EQ(new_dense, 4u);
  EXPECT_EQ(net.spec.layers[net.frozen_prefix], LayerSpec::dense(800, 600));
  EXPECT_EQ(net.spec.layers.back().kind, LayerKind::sigmoid);
  EXPECT_EQ(net.spec.head(), HeadKind::confidence);
}

TEST(BuildConfidenceNet, DenseOnlySharesHiddenLayers) {
  const auto classifier = build_network("mlp:12-9", {5}, 3, HeadKind::dirichlet);
  const auto net = build_confidence_net(classifier, init_parameters(classifier, 1), 6, 2);
  EXPECT_EQ(net.frozen_prefix, 4u);  // dense, relu, dense, relu
  EXPECT_EQ(net.spec.layers[4], LayerSpec::dense(9, 6));
  // The score layer starts at zero, so every example starts at 0.5.
  Rng rng(3);
  Tensor x({4, 5});
  for (auto& v : x.values) v = rng.normal();
  for (double c : predict(net.spec, net.params, x).values) EXPECT_DOUBLE_EQ(c, 0.5);
}

TEST(BuildConfidenceNet, RejectsNetsWithoutHiddenLayers) {
  const NetworkSpec linear{{4}, {LayerSpec::dense(4, 3), LayerSpec::of(LayerKind::softplus_plus_one)}};
  EXPECT_THROW(build_confidence_net(linear, init_parameters(linear, 1), 8, 1), std::invalid_argument);
}

TEST(ConfidenceTargets, MatchClassifierPredictions) {
  const auto data = separable_blobs(6);
  const auto spec = build_network("mlp:8", data.example_shape(), 2, HeadKind::dirichlet);
  const auto params = init_parameters(spec, 3);
  const auto targets = confidence_targets(spec, params, data);
  const auto records = predict_records(spec, params, data);
  ASSERT_EQ(targets.size(), data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_DOUBLE_EQ(targets[i].c_star, records[i].tcp);
    EXPECT_EQ(targets[i].failed, !records[i].correct());
  }
}

TEST(TrainConfidence, FrozenPrefixBytesUnchanged) {
  SyntheticSpec s;
  s.classes = 3;
  s.dim = 6;
  s.separation = 2.0;
  s.per_class = 60;
  const auto data = synthetic_blobs(s);
  const auto spec = build_network("mlp:10-10", data.example_shape(), 3, HeadKind::dirichlet);
  const auto trained = train_classifier(spec, init_parameters(spec, 1), data, nullptr, quick_config(LossKind::iad, 3));
  const auto net = build_confidence_net(spec, trained.params, 8, 4);
  const auto targets = confidence_targets(spec, trained.params, data);
  TrainConfig cfg = quick_config(LossKind::confidence, 4);
  cfg.confidence.k = 3;
  const auto result = train_confidence(net, data, targets, cfg);
  for (std::size_t i = 0; i < net.frozen_prefix; ++i) EXPECT_EQ(result.params.layers[i], net.params.layers[i]);
  const std::size_t score = net.spec.layers.size() - 2;
  EXPECT_NE(result.params.layers[score].weight.values, net.params.layers[score].weight.values);
  EXPECT_EQ(result.log.epochs.size(), 4u);
  EXPECT_TRUE(std::isnan(result.log.epochs[0].train_accuracy));
}

TEST(ConfidenceHeadLoss, WithoutBarrierIsMse) {
  const NetworkSpec spec{{1}, {LayerSpec::dense(1, 1), LayerSpec::of(LayerKind::sigmoid)}};
  auto params = init_parameters(spec, 1);
  params.layers[0].weight.values = {1.0};
  const auto cache = forward(spec, params, Tensor({3, 1}, {-1.0, 0.0, 2.0}));
  const std::vector<ConfidenceTarget> targets{{0.2, false}, {0.9, true}, {0.5, false}};
  ConfidenceConfig cfg;
  cfg.lambda_c = 0.0;
  double want = 0.0;
  for (std::size_t i = 0; i < 3; ++i) want += std::pow(cache.output()[i] - targets[i].c_star, 2);
  EXPECT_NEAR(confidence_head_loss(cache, targets, cfg).value, want / 3.0, 1e-15);
}

TEST(ConfidenceHeadLoss, AllCorrectLeavesErrorBranchSilent) {
  const NetworkSpec spec{{1}, {LayerSpec::dense(1, 1), LayerSpec::of(LayerKind::sigmoid)}};
  const auto params = zeros_like(init_parameters(spec, 1));
  const auto cache = forward(spec, params, Tensor({2, 1}, {0.0, 0.0}));
  const std::vector<ConfidenceTarget> targets{{0.5, false}, {0.5, false}};
  ConfidenceConfig cfg;
  cfg.zeta = 100.0;  // would dominate if the error branch fired
  const double v = confidence_head_loss(cache, targets, cfg).value;
  EXPECT_NEAR(v, cfg.lambda_c / (1.0 + std::exp(cfg.m * (0.5 - cfg.t_correct()))), 1e-15);
}
