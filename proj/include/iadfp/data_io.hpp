#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "iadfp/tensor.hpp"

namespace iadfp {

enum class Split { train, validation, test };

std::string_view to_string(Split split);

struct Dataset {
  Tensor features;          // [N, ...]
  std::vector<int> labels;  // N entries in [0, num_classes)
  int num_classes = 0;
  Split split = Split::train;

  std::size_t size() const { return labels.size(); }
  /// Per-example feature shape (features.shape without the leading N).
  Shape example_shape() const;
  /// Throws std::invalid_argument if labels or features break the invariants.
  void validate() const;
  Dataset subset(std::span<const std::size_t> indices) const;
};

/// IDX parse failure. Each failure mode has its own kind.
class IdxError : public std::runtime_error {
 public:
  enum class Kind { io, bad_magic, truncated, count_mismatch };

  IdxError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// Reads an IDX image/label file pair (the MNIST / Fashion-MNIST layout).
/// Features come back as [N, rows, cols] with pixels divided by 255.
/// `num_classes` of 0 means max label + 1.
Dataset read_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 int num_classes = 0);

struct SyntheticSpec {
  int classes = 3;
  std::size_t dim = 8;         // must be >= classes
  double separation = 3.0;     // distance between any two cluster means
  double stddev = 1.0;         // shared isotropic standard deviation
  std::size_t per_class = 200;
  std::uint64_t seed = 0;

  void validate() const;
};

/// K isotropic Gaussian clusters with means (separation / sqrt 2) e_k, so
/// every pair of means is `separation` apart. Examples are interleaved by
/// class; split_shuffle does the shuffling.
Dataset synthetic_blobs(const SyntheticSpec& spec);

/// Disjoint, label-preserving (train, validation, test) partition of a seeded
/// permutation. Part sizes are floor(fraction * N); leftovers are dropped.
/// Throws std::invalid_argument when fractions are negative or sum past 1.
std::array<Dataset, 3> split_shuffle(const Dataset& data, std::array<double, 3> fractions,
                                     std::uint64_t seed);

/// Per-feature standardization fitted on `reference`, applied in place.
void standardize(Dataset& data, const Dataset& reference);

}  // namespace iadfp
