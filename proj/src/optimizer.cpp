#include "iadfp/optimizer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "iadfp/errors.hpp"

namespace iadfp {

std::string_view to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::sgd: return "sgd";
    case OptimizerKind::sgd_momentum: return "sgd-momentum";
    case OptimizerKind::adam: return "adam";
  }
  return "unknown";
}

OptimizerKind parse_optimizer_kind(std::string_view name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "sgd-momentum") return OptimizerKind::sgd_momentum;
  if (name == "adam") return OptimizerKind::adam;
  throw std::invalid_argument("unknown optimizer '" + std::string(name) +
                              "' (expected sgd, sgd-momentum or adam)");
}

void optimizer_step(OptimizerKind kind, std::span<double> theta, std::span<const double> grad,
                    MomentState& state, const OptimizerHyper& hyper) {
  if (theta.size() != grad.size()) throw ShapeError("optimizer_step: parameter/gradient size mismatch");
  const std::size_t n = theta.size();
  ++state.step;
  switch (kind) {
    case OptimizerKind::sgd:
      for (std::size_t i = 0; i < n; ++i) theta[i] -= hyper.lr * (grad[i] + hyper.weight_decay * theta[i]);
      break;
    case OptimizerKind::sgd_momentum:
      state.first.resize(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        state.first[i] = hyper.momentum * state.first[i] + grad[i] + hyper.weight_decay * theta[i];
        theta[i] -= hyper.lr * state.first[i];
      }
      break;
    case OptimizerKind::adam: {
      state.first.resize(n, 0.0);
      state.second.resize(n, 0.0);
      const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.step));
      const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.step));
      for (std::size_t i = 0; i < n; ++i) {
        const double g = grad[i] + hyper.weight_decay * theta[i];
        state.first[i] = hyper.beta1 * state.first[i] + (1.0 - hyper.beta1) * g;
        state.second[i] = hyper.beta2 * state.second[i] + (1.0 - hyper.beta2) * g * g;
        theta[i] -= hyper.lr * (state.first[i] / c1) / (std::sqrt(state.second[i] / c2) + hyper.eps);
      }
      break;
    }
  }
}

void Optimizer::step(const NetworkSpec& spec, Parameters& params, const Parameters& grads) {
  if (states_.empty()) states_.resize(2 * spec.layers.size());
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    if (!spec.layers[i].has_parameters() || !spec.layers[i].trainable) continue;
    optimizer_step(kind_, params.layers[i].weight.values, grads.layers[i].weight.values, states_[2 * i],
                   hyper_);
    optimizer_step(kind_, params.layers[i].bias.values, grads.layers[i].bias.values, states_[2 * i + 1],
                   hyper_);
  }
}

}  // namespace iadfp
