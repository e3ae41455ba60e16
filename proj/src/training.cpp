#include "iadfp/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "iadfp/errors.hpp"
#include "iadfp/rng.hpp"

namespace iadfp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

/// Turns classifier outputs into a distribution over classes.
std::vector<double> class_probs(HeadKind head, std::span<const double> out) {
  std::vector<double> p(out.begin(), out.end());
  if (head == HeadKind::dirichlet) {
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    for (double& v : p) v /= total;
  }
  return p;
}

std::size_t count_correct(const Tensor& outputs, std::span<const int> labels) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (static_cast<int>(argmax(outputs.row(i))) == labels[i]) ++correct;
  }
  return correct;
}

void check_finite(double loss, std::size_t epoch) {
  if (!std::isfinite(loss)) {
    throw TrainingDiverged("training diverged: non-finite loss in epoch " + std::to_string(epoch));
  }
}

OptimizerHyper hyper_from(const TrainConfig& cfg) {
  OptimizerHyper h;
  h.lr = cfg.learning_rate;
  h.weight_decay = cfg.weight_decay;
  return h;
}

}  // namespace

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::iad: return "iad";
    case LossKind::softmax_ce: return "ce";
    case LossKind::confidence: return "confidence";
  }
  return "unknown";
}

void TrainConfig::validate() const {
  if (epochs == 0) throw std::invalid_argument("train.epochs must be positive");
  if (batch_size == 0) throw std::invalid_argument("train.batch_size must be positive");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("train.learning_rate must be positive");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("train.weight_decay must be >= 0");
  iad.validate();
  if (loss == LossKind::confidence) confidence.validate();
}

void TrainLog::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  out << "epoch,train_loss,train_accuracy,validation_accuracy,lambda_t,wall_seconds\n";
  for (const auto& e : epochs) {
    out << e.epoch << ',' << e.train_loss << ',' << e.train_accuracy << ',' << e.validation_accuracy << ','
        << e.lambda_t << ',' << e.wall_seconds << '\n';
  }
}

HeadLoss iad_head_loss(const ForwardCache& cache, std::span<const int> labels, const IadLossConfig& cfg,
                       double epoch) {
  auto batch = iad::batch_loss(cache.output(), labels, cfg, epoch);
  return {batch.value.total, std::move(batch.grad), GradientAt::output};
}

HeadLoss ce_head_loss(const ForwardCache& cache, std::span<const int> labels) {
  const Tensor& logits = cache.head_input();
  const Tensor& probs = cache.output();
  const std::size_t n = logits.rows();
  if (n == 0) throw EmptyInputError("ce_head_loss: empty batch");
  if (labels.size() != n) throw ShapeError("ce_head_loss: label count differs from batch size");
  const std::size_t k = logits.row_size();
  HeadLoss out{0.0, Tensor(logits.shape), GradientAt::head_input};
  for (std::size_t i = 0; i < n; ++i) {
    const auto z = logits.row(i);
    const auto c = static_cast<std::size_t>(labels[i]);
    const double hi = *std::max_element(z.begin(), z.end());
    double total = 0.0;
    for (double v : z) total += std::exp(v - hi);
    out.value += hi + std::log(total) - z[c];
    auto g = out.grad.row(i);
    for (std::size_t j = 0; j < k; ++j) g[j] = (probs.row(i)[j] - (j == c ? 1.0 : 0.0)) / n;
  }
  out.value /= static_cast<double>(n);
  return out;
}

HeadLoss confidence_head_loss(const ForwardCache& cache, std::span<const ConfidenceTarget> targets,
                              const ConfidenceConfig& cfg) {
  const Tensor& c_hat = cache.output();
  if (c_hat.row_size() != 1) throw ShapeError("confidence_head_loss: head must output one score");
  if (targets.size() != c_hat.rows()) throw ShapeError("confidence_head_loss: target count mismatch");
  std::vector<ConfidenceSample> samples(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    samples[i] = {c_hat[i], targets[i].c_star, targets[i].failed};
  }
  auto loss = confidence::confidence_loss(samples, cfg);
  return {loss.value, Tensor(c_hat.shape, std::move(loss.grad)), GradientAt::output};
}

TrainResult train_classifier(const NetworkSpec& spec, Parameters params, const Dataset& train,
                             const Dataset* validation, const TrainConfig& cfg) {
  cfg.validate();
  spec.validate();
  const HeadKind head = spec.head();
  if (head == HeadKind::confidence) throw std::invalid_argument("train_classifier: network has a confidence head");
  if (spec.output_size() != static_cast<std::size_t>(train.num_classes)) {
    throw ShapeError("train_classifier: network outputs " + std::to_string(spec.output_size()) +
                     " classes, data has " + std::to_string(train.num_classes));
  }

  Rng rng(cfg.seed);
  Optimizer optimizer(cfg.optimizer, hyper_from(cfg));
  TrainLog log;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    if (cfg.shuffle) rng.shuffle(std::span<std::size_t>(order));
    const double lambda_t = head == HeadKind::dirichlet ? iad::anneal(static_cast<double>(epoch), cfg.iad) : 0.0;

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t count = std::min(cfg.batch_size, order.size() - start);
      const auto idx = std::span<const std::size_t>(order).subspan(start, count);
      const Tensor batch = train.features.gather_rows(idx);
      std::vector<int> labels(count);
      for (std::size_t i = 0; i < count; ++i) labels[i] = train.labels[idx[i]];

      const auto cache = forward(spec, params, batch);
      const HeadLoss loss = head == HeadKind::dirichlet
                                ? iad_head_loss(cache, labels, cfg.iad, static_cast<double>(epoch))
                                : ce_head_loss(cache, labels);
      check_finite(loss.value, epoch);
      loss_sum += loss.value * static_cast<double>(count);
      correct += count_correct(cache.output(), labels);

      const auto grads = backward(spec, params, cache, loss.grad, loss.at);
      optimizer.step(spec, params, grads.params);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(train.size());
    rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(train.size());
    rec.validation_accuracy = kNaN;
    if (validation != nullptr && validation->size() > 0) {
      const Tensor out = predict(spec, params, validation->features);
      rec.validation_accuracy =
          static_cast<double>(count_correct(out, validation->labels)) / static_cast<double>(validation->size());
    }
    rec.lambda_t = lambda_t;
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    log.epochs.push_back(rec);
  }
  return {std::move(params), std::move(log)};
}

ConfidenceNet build_confidence_net(const NetworkSpec& classifier, const Parameters& classifier_params,
                                   std::size_t n_h, std::uint64_t seed) {
  classifier.validate();
  if (classifier.head() == HeadKind::confidence) {
    throw std::invalid_argument("build_confidence_net: expected a classifier, got a confidence network");
  }
  if (n_h == 0) throw std::invalid_argument("build_confidence_net: n_h must be positive");
  if (classifier_params.layers.size() != classifier.layers.size()) {
    throw ShapeError("build_confidence_net: checkpoint does not match architecture");
  }

  std::size_t prefix = 0;
  for (std::size_t i = 0; i < classifier.layers.size(); ++i) {
    const auto kind = classifier.layers[i].kind;
    if (kind == LayerKind::conv2d || kind == LayerKind::maxpool2 || kind == LayerKind::flatten) prefix = i + 1;
  }
  if (prefix == 0) {
    // Dense-only: share every hidden layer, leave out the class-score dense
    // layer and the head.
    prefix = classifier.layers.size() - 2;
    if (prefix == 0) throw std::invalid_argument("build_confidence_net: classifier has no hidden layers to share");
  }

  ConfidenceNet net;
  net.spec.input_shape = classifier.input_shape;
  net.spec.layers.assign(classifier.layers.begin(), classifier.layers.begin() + static_cast<std::ptrdiff_t>(prefix));
  for (auto& l : net.spec.layers) l.trainable = false;
  net.frozen_prefix = prefix;

  Shape feature_shape = NetworkSpec{classifier.input_shape, net.spec.layers}.layer_shapes().back();
  if (feature_shape.size() != 1) {
    net.spec.layers.push_back(LayerSpec::of(LayerKind::flatten));
    net.spec.layers.back().trainable = false;
    feature_shape = {shape_size(feature_shape)};
  }
  std::size_t width = feature_shape[0];
  for (int block = 0; block < 3; ++block) {
    net.spec.layers.push_back(LayerSpec::dense(width, n_h));
    net.spec.layers.push_back(LayerSpec::of(LayerKind::relu));
    width = n_h;
  }
  net.spec.layers.push_back(LayerSpec::dense(width, 1));
  net.spec.layers.push_back(LayerSpec::of(LayerKind::sigmoid));
  net.spec.validate();

  net.params = init_parameters(net.spec, seed);
  // Zero score layer: every input starts at c_hat = 0.5, in the sigmoid's
  // linear range, whatever the scale of the frozen features.
  auto& score = net.params.layers[net.spec.layers.size() - 2];
  std::fill(score.weight.values.begin(), score.weight.values.end(), 0.0);
  for (std::size_t i = 0; i < prefix; ++i) net.params.layers[i] = classifier_params.layers[i];
  return net;
}

std::vector<ConfidenceTarget> confidence_targets(const NetworkSpec& classifier, const Parameters& params,
                                                 const Dataset& data) {
  const HeadKind head = classifier.head();
  const Tensor out = predict(classifier, params, data.features);
  std::vector<ConfidenceTarget> targets(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto probs = class_probs(head, out.row(i));
    const auto c = static_cast<std::size_t>(data.labels[i]);
    targets[i] = {probs.at(c), argmax(probs) != c};
  }
  return targets;
}

TrainResult train_confidence(const ConfidenceNet& net, const Dataset& train,
                             std::span<const ConfidenceTarget> targets, const TrainConfig& cfg) {
  TrainConfig conf_cfg = cfg;
  conf_cfg.loss = LossKind::confidence;
  conf_cfg.validate();
  if (targets.size() != train.size()) throw ShapeError("train_confidence: one target per example required");

  // First layer that can change; everything before it is fixed.
  std::size_t first = 0;
  while (first < net.spec.layers.size() && !(net.spec.layers[first].has_parameters() && net.spec.layers[first].trainable)) {
    ++first;
  }
  if (first == net.spec.layers.size()) throw std::invalid_argument("train_confidence: nothing to train");

  const auto shapes = net.spec.layer_shapes();
  NetworkSpec prefix{net.spec.input_shape, {net.spec.layers.begin(), net.spec.layers.begin() + static_cast<std::ptrdiff_t>(first)}};
  Parameters prefix_params{{net.params.layers.begin(), net.params.layers.begin() + static_cast<std::ptrdiff_t>(first)}};
  NetworkSpec suffix{shapes[first], {net.spec.layers.begin() + static_cast<std::ptrdiff_t>(first), net.spec.layers.end()}};
  Parameters params{{net.params.layers.begin() + static_cast<std::ptrdiff_t>(first), net.params.layers.end()}};

  const Tensor features = first == 0 ? train.features : predict(prefix, prefix_params, train.features);

  Rng rng(cfg.seed);
  Optimizer optimizer(cfg.optimizer, hyper_from(cfg));
  TrainLog log;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    if (cfg.shuffle) rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t count = std::min(cfg.batch_size, order.size() - start);
      const auto idx = std::span<const std::size_t>(order).subspan(start, count);
      const Tensor batch = features.gather_rows(idx);
      std::vector<ConfidenceTarget> batch_targets(count);
      for (std::size_t i = 0; i < count; ++i) batch_targets[i] = targets[idx[i]];

      const auto cache = forward(suffix, params, batch);
      const HeadLoss loss = confidence_head_loss(cache, batch_targets, cfg.confidence);
      check_finite(loss.value, epoch);
      loss_sum += loss.value * static_cast<double>(count);
      const auto grads = backward(suffix, params, cache, loss.grad, loss.at);
      optimizer.step(suffix, params, grads.params);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(train.size());
    rec.train_accuracy = kNaN;
    rec.validation_accuracy = kNaN;
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    log.epochs.push_back(rec);
  }

  Parameters full = net.params;
  for (std::size_t i = first; i < full.layers.size(); ++i) full.layers[i] = std::move(params.layers[i - first]);
  return {std::move(full), std::move(log)};
}

std::vector<PredictionRecord> predict_records(const NetworkSpec& classifier, const Parameters& params,
                                              const Dataset& data, const ConfidenceNet* confidence_net) {
  const HeadKind head = classifier.head();
  const Tensor out = predict(classifier, params, data.features);
  Tensor c_hat;
  if (confidence_net != nullptr) c_hat = predict(confidence_net->spec, confidence_net->params, data.features);

  std::vector<PredictionRecord> records(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto& r = records[i];
    r.index = i;
    r.true_class = data.labels[i];
    r.probs = class_probs(head, out.row(i));
    if (head == HeadKind::dirichlet) r.alpha.assign(out.row(i).begin(), out.row(i).end());
    r.predicted_class = static_cast<int>(argmax(r.probs));
    r.tcp = confidence::tcp_score(r.probs, static_cast<std::size_t>(r.true_class));
    r.mcp = confidence::mcp_score(r.probs);
    if (confidence_net != nullptr) r.chat = c_hat[i];
  }
  return records;
}

}  // namespace iadfp
