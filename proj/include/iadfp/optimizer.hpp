#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "iadfp/network.hpp"

namespace iadfp {

enum class OptimizerKind { sgd, sgd_momentum, adam };

std::string_view to_string(OptimizerKind kind);
/// "sgd", "sgd-momentum" or "adam".
OptimizerKind parse_optimizer_kind(std::string_view name);

struct OptimizerHyper {
  double lr = 1e-3;
  double weight_decay = 0.0;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Moment buffers for one tensor.
struct MomentState {
  std::vector<double> first;
  std::vector<double> second;
  long step = 0;
};

/// Update rules, with g' = g + weight_decay * theta:
///   sgd:          theta -= lr g'
///   sgd-momentum: v = momentum v + g';  theta -= lr v
///   adam:         m = b1 m + (1 - b1) g';  s = b2 s + (1 - b2) g'^2;
///                 theta -= lr (m / (1 - b1^t)) / (sqrt(s / (1 - b2^t)) + eps)
void optimizer_step(OptimizerKind kind, std::span<double> theta, std::span<const double> grad,
                    MomentState& state, const OptimizerHyper& hyper);

/// Optimizer over a whole network; frozen layers are never touched.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, OptimizerHyper hyper) : kind_(kind), hyper_(hyper) {}

  void step(const NetworkSpec& spec, Parameters& params, const Parameters& grads);

 private:
  OptimizerKind kind_;
  OptimizerHyper hyper_;
  std::vector<MomentState> states_;  // two per layer: weight, bias
};

}  // namespace iadfp
