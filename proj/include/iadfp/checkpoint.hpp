#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "iadfp/network.hpp"

namespace iadfp {

/// Network plus weights, as stored on disk. Layout in docs/checkpoint_format.md.
struct Checkpoint {
  NetworkSpec spec;
  Parameters params;
  int num_classes = 0;           // classes of the underlying classifier
  std::size_t frozen_prefix = 0; // confidence networks: shared frozen layers
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace iadfp
