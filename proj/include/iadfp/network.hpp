#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "iadfp/tensor.hpp"

namespace iadfp {

enum class LayerKind {
  dense,
  relu,
  sigmoid,
  softplus_plus_one,  // Dirichlet head: alpha = softplus(z) + 1
  conv2d,
  maxpool2,
  flatten,
  softmax_ce_head,
};

std::string_view to_string(LayerKind kind);
LayerKind parse_layer_kind(std::string_view name);

/// What the final layer produces.
enum class HeadKind {
  dirichlet,   // concentration parameters, every entry >= 1
  softmax,     // class probabilities; logits are the head's input
  confidence,  // a single sigmoid score in (0, 1)
};

std::string_view to_string(HeadKind kind);

struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  std::size_t in = 0;      // dense: input features; conv2d: input channels
  std::size_t out = 0;     // dense: output features; conv2d: output channels
  std::size_t kernel = 0;  // conv2d only
  bool trainable = true;

  static LayerSpec dense(std::size_t in, std::size_t out) { return {LayerKind::dense, in, out, 0}; }
  static LayerSpec conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t k) {
    return {LayerKind::conv2d, in_ch, out_ch, k};
  }
  static LayerSpec of(LayerKind kind) { return {kind, 0, 0, 0}; }

  bool has_parameters() const { return kind == LayerKind::dense || kind == LayerKind::conv2d; }
  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct NetworkSpec {
  Shape input_shape;  // one example, without the batch dimension
  std::vector<LayerSpec> layers;

  /// Per-example output shape after each layer; element 0 is the input.
  /// Throws ShapeError when adjacent layers do not fit together.
  std::vector<Shape> layer_shapes() const;
  /// Checks shapes and that exactly one head layer sits at the end.
  void validate() const;
  HeadKind head() const;
  std::size_t input_size() const { return shape_size(input_shape); }
  std::size_t output_size() const;

  friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

/// Builds a network from an architecture string such as "lenet:20{5}-50{5}-500"
/// or "mlp:64-64". Each "n{k}" token is conv2d(n, k) + relu + maxpool2; each
/// plain "n" is dense(n) + relu, with a flatten inserted before the first dense
/// layer when the input is an image. A final dense(num_classes) and the head
/// complete the network. Throws std::invalid_argument on malformed strings.
NetworkSpec build_network(std::string_view architecture, const Shape& input_shape,
                          std::size_t num_classes, HeadKind head);

struct LayerParams {
  Tensor weight;  // dense [out, in]; conv2d [out, in, k, k]; empty otherwise
  Tensor bias;    // [out]

  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

struct Parameters {
  std::vector<LayerParams> layers;

  std::size_t count() const;
  friend bool operator==(const Parameters&, const Parameters&) = default;
};

/// Fan-in scaled uniform initialization: bound sqrt(6 / fan_in) when a relu
/// follows the layer, sqrt(3 / fan_in) otherwise. Biases start at zero.
Parameters init_parameters(const NetworkSpec& spec, std::uint64_t seed);

/// Zero tensors shaped like `params`.
Parameters zeros_like(const Parameters& params);

struct ForwardCache {
  std::vector<Tensor> activations;  // [0] is the input, [i + 1] is layer i's output
  std::vector<std::vector<std::uint32_t>> pool_argmax;

  const Tensor& output() const { return activations.back(); }
  /// Input to the final layer (the logits for a softmax head).
  const Tensor& head_input() const { return activations[activations.size() - 2]; }
};

/// Runs the batch [N, input_shape...] through the network. Any batch whose
/// rows have the input's element count is accepted.
ForwardCache forward(const NetworkSpec& spec, const Parameters& params, const Tensor& batch);

/// Forward in chunks, keeping only the outputs.
Tensor predict(const NetworkSpec& spec, const Parameters& params, const Tensor& inputs,
               std::size_t batch_size = 256);

/// Where the upstream gradient handed to backward() lives.
enum class GradientAt {
  output,      // d loss / d (final layer output)
  head_input,  // d loss / d (input of the final layer), e.g. fused softmax-CE
};

struct Gradients {
  Parameters params;  // zero for frozen and parameterless layers
  Tensor input;       // only filled when requested
};

Gradients backward(const NetworkSpec& spec, const Parameters& params, const ForwardCache& cache,
                   const Tensor& upstream, GradientAt at = GradientAt::output,
                   bool want_input_gradient = false);

/// Scalar loss evaluated on a forward pass, with its gradient.
struct HeadLoss {
  double value = 0.0;
  Tensor grad;
  GradientAt at = GradientAt::output;
};
using LossFn = std::function<HeadLoss(const ForwardCache&)>;

struct GradcheckReport {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t checked = 0;
  std::size_t worst_layer = 0;
  std::size_t worst_index = 0;
  bool passed = false;
};

/// Central differences on every trainable parameter. The relative error is
/// |a - n| / max(|a|, |n|, 1e-6); the floor keeps vanishing gradients from
/// dividing round-off by zero.
GradcheckReport gradcheck(const NetworkSpec& spec, const Parameters& params, const LossFn& loss,
                          const Tensor& batch, double tolerance, double step = 1e-5);

}  // namespace iadfp
