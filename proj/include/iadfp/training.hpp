#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "iadfp/confidence.hpp"
#include "iadfp/data_io.hpp"
#include "iadfp/iad_loss.hpp"
#include "iadfp/network.hpp"
#include "iadfp/optimizer.hpp"
#include "iadfp/records.hpp"

namespace iadfp {

enum class LossKind { iad, softmax_ce, confidence };

std::string_view to_string(LossKind kind);

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 128;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::adam;
  double weight_decay = 1e-4;
  std::uint64_t seed = 0;
  bool shuffle = true;
  LossKind loss = LossKind::iad;
  IadLossConfig iad;
  ConfidenceConfig confidence;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;       // NaN for confidence training
  double validation_accuracy = 0.0;  // NaN without a validation split
  double lambda_t = 0.0;
  double wall_seconds = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;

  /// Columns: epoch,train_loss,train_accuracy,validation_accuracy,lambda_t,wall_seconds
  void write_csv(const std::filesystem::path& path) const;
};

struct TrainResult {
  Parameters params;
  TrainLog log;
};

/// The training loss became NaN or infinite.
class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ConfidenceTarget {
  double c_star = 0.0;  // classifier's probability on the true class
  bool failed = false;  // classifier's prediction is wrong
};

// Loss adapters from a forward pass to HeadLoss.
HeadLoss iad_head_loss(const ForwardCache& cache, std::span<const int> labels, const IadLossConfig& cfg,
                       double epoch);
/// Mean cross-entropy; the gradient is (p - y) / N at the head input.
HeadLoss ce_head_loss(const ForwardCache& cache, std::span<const int> labels);
HeadLoss confidence_head_loss(const ForwardCache& cache, std::span<const ConfidenceTarget> targets,
                              const ConfidenceConfig& cfg);

/// Minibatch training under the IAD objective (dirichlet head) or
/// cross-entropy (softmax head). Epochs are numbered from 1, and epoch t uses
/// lambda_t = anneal(t). Deterministic for a fixed seed.
TrainResult train_classifier(const NetworkSpec& spec, Parameters params, const Dataset& train,
                             const Dataset* validation, const TrainConfig& cfg);

/// A confidence network sharing a frozen feature prefix with a classifier.
struct ConfidenceNet {
  NetworkSpec spec;
  Parameters params;
  std::size_t frozen_prefix = 0;  // layers [0, frozen_prefix) are frozen copies
};

/// Copies and freezes the classifier's feature layers, then appends three
/// dense(n_h)+relu blocks and a dense(1)+sigmoid score. The shared prefix runs
/// through the last conv, pool or flatten layer; dense-only nets share every
/// hidden layer. The score layer starts at zero weights, so c_hat starts at 1/2.
ConfidenceNet build_confidence_net(const NetworkSpec& classifier, const Parameters& classifier_params,
                                   std::size_t n_h, std::uint64_t seed);

/// TCP targets and failure flags from the frozen classifier.
std::vector<ConfidenceTarget> confidence_targets(const NetworkSpec& classifier, const Parameters& params,
                                                 const Dataset& data);

/// Trains the non-frozen suffix under the constrained confidence loss. Frozen
/// prefix outputs are computed once, since those layers cannot change.
TrainResult train_confidence(const ConfidenceNet& net, const Dataset& train,
                             std::span<const ConfidenceTarget> targets, const TrainConfig& cfg);

/// Scores every example: TCP and MCP from the classifier, and the learned
/// confidence when a confidence network is given.
std::vector<PredictionRecord> predict_records(const NetworkSpec& classifier, const Parameters& params,
                                              const Dataset& data,
                                              const ConfidenceNet* confidence_net = nullptr);

}  // namespace iadfp
