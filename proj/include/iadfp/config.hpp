#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "iadfp/confidence.hpp"
#include "iadfp/data_io.hpp"
#include "iadfp/iad_loss.hpp"
#include "iadfp/network.hpp"
#include "iadfp/records.hpp"
#include "iadfp/training.hpp"

namespace iadfp {

/// A config document failed to parse or validate. `where()` is either a
/// "line L, column C" position (syntax) or a dotted field path (schema).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string where, const std::string& message)
      : std::runtime_error(where.empty() ? message : where + ": " + message), where_(std::move(where)) {}
  const std::string& where() const { return where_; }

 private:
  std::string where_;
};

struct DataConfig {
  std::string kind = "synthetic";  // "synthetic" or "idx"
  // idx: the four Fashion-MNIST style files. Relative paths resolve against
  // the config file's directory.
  std::filesystem::path train_images;
  std::filesystem::path train_labels;
  std::filesystem::path test_images;
  std::filesystem::path test_labels;
  std::size_t train_subset = 0;  // keep this many training examples; 0 keeps all
  SyntheticSpec synthetic;
  // synthetic: (train, validation, test) fractions of the generated set.
  // idx: train and validation fractions of the training file; test is the
  // test file.
  std::array<double, 3> split{0.6, 0.1, 0.3};
  bool standardize = false;  // per-feature, fitted on the training split
};

struct ModelConfig {
  std::string architecture = "mlp:32-32";
  HeadKind head = HeadKind::dirichlet;
};

struct ConfidenceSection {
  ConfidenceConfig loss;  // k is filled in from the data
  std::size_t n_h = 600;
  // Training overrides for the confidence phase; 0 means "same as train".
  std::size_t epochs = 0;
  std::size_t batch_size = 0;
  double learning_rate = 0.0;
};

struct EvalConfig {
  ScoreKind score = ScoreKind::mcp;
  double tpr_target = 0.85;
  std::size_t histogram_bins = 20;
};

struct RunConfig {
  std::uint64_t seed = 0;
  DataConfig data;
  ModelConfig model;
  TrainConfig train;  // train.iad / train.confidence are mirrored from the sections below
  IadLossConfig iad;
  ConfidenceSection confidence;
  EvalConfig eval;
  std::filesystem::path output_directory = "out";

  /// TrainConfig for the classifier phase, with the loss chosen by the head.
  TrainConfig classifier_train_config() const;
  /// TrainConfig for the confidence phase, for a problem with `num_classes`.
  TrainConfig confidence_train_config(int num_classes) const;
};

/// Parses and validates a JSON config. Unknown keys are rejected. Throws
/// ConfigError.
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Every field, defaults included, as pretty-printed JSON.
std::string resolved_config_json(const RunConfig& cfg);

/// The train/validation/test splits described by `cfg.data`.
struct DataSplits {
  Dataset train;
  Dataset validation;
  Dataset test;
};
DataSplits load_data(const RunConfig& cfg);

}  // namespace iadfp
