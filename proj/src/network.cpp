#include "iadfp/network.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

#include "iadfp/errors.hpp"
#include "iadfp/kernels.hpp"
#include "iadfp/rng.hpp"

namespace iadfp {

namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

bool is_head(LayerKind kind) {
  return kind == LayerKind::softplus_plus_one || kind == LayerKind::softmax_ce_head ||
         kind == LayerKind::sigmoid;
}

Shape batched(std::size_t n, const Shape& example) {
  Shape s{n};
  s.insert(s.end(), example.begin(), example.end());
  return s;
}

kernels::DenseDims dense_dims(const LayerSpec& l, std::size_t n) { return {n, l.in, l.out}; }

kernels::ConvDims conv_dims(const LayerSpec& l, const Shape& in, std::size_t n) {
  return {n, in[0], in[1], in[2], l.out, l.kernel};
}

kernels::PoolDims pool_dims(const Shape& in, std::size_t n) { return {n, in[0], in[1], in[2]}; }

}  // namespace

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::dense: return "dense";
    case LayerKind::relu: return "relu";
    case LayerKind::sigmoid: return "sigmoid";
    case LayerKind::softplus_plus_one: return "softplus_plus_one";
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::maxpool2: return "maxpool2";
    case LayerKind::flatten: return "flatten";
    case LayerKind::softmax_ce_head: return "softmax_ce_head";
  }
  return "unknown";
}

LayerKind parse_layer_kind(std::string_view name) {
  for (auto kind : {LayerKind::dense, LayerKind::relu, LayerKind::sigmoid,
                    LayerKind::softplus_plus_one, LayerKind::conv2d, LayerKind::maxpool2,
                    LayerKind::flatten, LayerKind::softmax_ce_head}) {
    if (to_string(kind) == name) return kind;
  }
  throw std::invalid_argument("unknown layer kind '" + std::string(name) + "'");
}

std::string_view to_string(HeadKind kind) {
  switch (kind) {
    case HeadKind::dirichlet: return "iad";
    case HeadKind::softmax: return "ce";
    case HeadKind::confidence: return "confidence";
  }
  return "unknown";
}

std::vector<Shape> NetworkSpec::layer_shapes() const {
  std::vector<Shape> shapes{input_shape};
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    const Shape& in = shapes.back();
    const std::string where = "layer " + std::to_string(i) + " (" + std::string(to_string(l.kind)) + ")";
    switch (l.kind) {
      case LayerKind::dense:
        if (in.size() != 1 || in[0] != l.in || l.out == 0) {
          throw ShapeError(where + ": expects [" + std::to_string(l.in) + "], got " + shape_string(in));
        }
        shapes.push_back({l.out});
        break;
      case LayerKind::conv2d:
        if (in.size() != 3 || in[0] != l.in || l.out == 0 || l.kernel == 0 || in[1] < l.kernel ||
            in[2] < l.kernel) {
          throw ShapeError(where + ": kernel " + std::to_string(l.kernel) + " over " + std::to_string(l.in) +
                           " channels does not fit input " + shape_string(in));
        }
        shapes.push_back({l.out, in[1] - l.kernel + 1, in[2] - l.kernel + 1});
        break;
      case LayerKind::maxpool2:
        if (in.size() != 3 || in[1] < 2 || in[2] < 2) {
          throw ShapeError(where + ": needs a [C,H,W] input with H,W >= 2, got " + shape_string(in));
        }
        shapes.push_back({in[0], in[1] / 2, in[2] / 2});
        break;
      case LayerKind::flatten:
        shapes.push_back({shape_size(in)});
        break;
      case LayerKind::softmax_ce_head:
        if (in.size() != 1) throw ShapeError(where + ": needs a flat input, got " + shape_string(in));
        shapes.push_back(in);
        break;
      default:
        shapes.push_back(in);
    }
  }
  return shapes;
}

void NetworkSpec::validate() const {
  if (input_shape.empty() || shape_size(input_shape) == 0) throw ShapeError("network: empty input shape");
  if (layers.empty()) throw ShapeError("network: no layers");
  if (!is_head(layers.back().kind)) throw ShapeError("network: last layer must be a head");
  for (std::size_t i = 0; i + 1 < layers.size(); ++i) {
    if (layers[i].kind == LayerKind::softplus_plus_one || layers[i].kind == LayerKind::softmax_ce_head) {
      throw ShapeError("network: head layer at position " + std::to_string(i) + " is not last");
    }
  }
  (void)layer_shapes();
}

HeadKind NetworkSpec::head() const {
  if (layers.empty()) throw ShapeError("network: no layers");
  switch (layers.back().kind) {
    case LayerKind::softplus_plus_one: return HeadKind::dirichlet;
    case LayerKind::softmax_ce_head: return HeadKind::softmax;
    case LayerKind::sigmoid: return HeadKind::confidence;
    default: throw ShapeError("network: last layer is not a head");
  }
}

std::size_t NetworkSpec::output_size() const { return shape_size(layer_shapes().back()); }

NetworkSpec build_network(std::string_view architecture, const Shape& input_shape,
                          std::size_t num_classes, HeadKind head) {
  const auto colon = architecture.find(':');
  if (colon == std::string_view::npos) {
    throw std::invalid_argument("architecture '" + std::string(architecture) +
                                "' must look like family:spec, e.g. lenet:20{5}-50{5}-500");
  }
  const auto family = architecture.substr(0, colon);
  const auto body = architecture.substr(colon + 1);
  if (family != "lenet" && family != "mlp") {
    throw std::invalid_argument("unknown architecture family '" + std::string(family) +
                                "' (expected lenet or mlp)");
  }
  if (num_classes < 2) throw std::invalid_argument("architecture: need at least two classes");
  if (head == HeadKind::confidence) throw std::invalid_argument("architecture: classifier head required");

  NetworkSpec spec;
  spec.input_shape = input_shape;
  Shape current = input_shape;

  auto parse_int = [&](std::string_view text) {
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || value == 0) {
      throw std::invalid_argument("architecture '" + std::string(architecture) + "': bad size '" +
                                  std::string(text) + "'");
    }
    return value;
  };
  auto add = [&](LayerSpec l) {
    spec.layers.push_back(l);
    NetworkSpec partial{input_shape, spec.layers};
    try {
      current = partial.layer_shapes().back();
    } catch (const ShapeError& e) {
      throw std::invalid_argument("architecture '" + std::string(architecture) + "': " + e.what());
    }
  };
  auto add_dense = [&](std::size_t width) {
    if (current.size() != 1) add(LayerSpec::of(LayerKind::flatten));
    add(LayerSpec::dense(current[0], width));
  };

  std::size_t start = 0;
  while (!body.empty() && start <= body.size()) {
    auto end = body.find('-', start);
    if (end == std::string_view::npos) end = body.size();
    const auto token = body.substr(start, end - start);
    if (token.empty()) throw std::invalid_argument("architecture '" + std::string(architecture) + "': empty block");
    const auto brace = token.find('{');
    if (brace != std::string_view::npos) {
      if (family == "mlp") throw std::invalid_argument("architecture: mlp does not take conv blocks");
      if (token.back() != '}') throw std::invalid_argument("architecture: unterminated '{' in '" + std::string(token) + "'");
      const std::size_t filters = parse_int(token.substr(0, brace));
      const std::size_t kernel = parse_int(token.substr(brace + 1, token.size() - brace - 2));
      if (current.size() != 3) {
        throw std::invalid_argument("architecture: conv block '" + std::string(token) + "' needs an image input");
      }
      add(LayerSpec::conv2d(current[0], filters, kernel));
      add(LayerSpec::of(LayerKind::relu));
      add(LayerSpec::of(LayerKind::maxpool2));
    } else {
      add_dense(parse_int(token));
      add(LayerSpec::of(LayerKind::relu));
    }
    start = end + 1;
  }
  add_dense(num_classes);
  add(LayerSpec::of(head == HeadKind::dirichlet ? LayerKind::softplus_plus_one : LayerKind::softmax_ce_head));
  spec.validate();
  return spec;
}

std::size_t Parameters::count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

Parameters init_parameters(const NetworkSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  Parameters params;
  params.layers.resize(spec.layers.size());
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    if (!l.has_parameters()) continue;
    const bool relu_next = i + 1 < spec.layers.size() && spec.layers[i + 1].kind == LayerKind::relu;
    std::size_t fan_in = l.in;
    Shape wshape{l.out, l.in};
    if (l.kind == LayerKind::conv2d) {
      fan_in = l.in * l.kernel * l.kernel;
      wshape = {l.out, l.in, l.kernel, l.kernel};
    }
    const double bound = std::sqrt((relu_next ? 6.0 : 3.0) / static_cast<double>(fan_in));
    Tensor w(wshape);
    for (double& v : w.values) v = (2.0 * rng.uniform() - 1.0) * bound;
    params.layers[i] = {std::move(w), Tensor({l.out})};
  }
  return params;
}

Parameters zeros_like(const Parameters& params) {
  Parameters z;
  z.layers.reserve(params.layers.size());
  for (const auto& l : params.layers) z.layers.push_back({Tensor(l.weight.shape), Tensor(l.bias.shape)});
  return z;
}

ForwardCache forward(const NetworkSpec& spec, const Parameters& params, const Tensor& batch) {
  if (params.layers.size() != spec.layers.size()) throw ShapeError("forward: parameter/layer count mismatch");
  const auto shapes = spec.layer_shapes();
  const std::size_t per_example = shape_size(spec.input_shape);
  if (batch.rank() < 1 || batch.rows() == 0 || batch.size() != batch.rows() * per_example) {
    throw ShapeError("forward: batch " + shape_string(batch.shape) + " does not match input " +
                     shape_string(spec.input_shape));
  }
  const std::size_t n = batch.rows();

  ForwardCache cache;
  cache.activations.reserve(spec.layers.size() + 1);
  cache.activations.push_back(batch.reshaped(batched(n, spec.input_shape)));
  cache.pool_argmax.resize(spec.layers.size());

  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    const Tensor& x = cache.activations[i];
    Tensor y(batched(n, shapes[i + 1]));
    switch (l.kind) {
      case LayerKind::dense: {
        const auto& p = params.layers[i];
        kernels::dense_forward(dense_dims(l, n), x.values, p.weight.values, p.bias.values, y.values);
        break;
      }
      case LayerKind::conv2d: {
        const auto& p = params.layers[i];
        kernels::conv2d_forward(conv_dims(l, shapes[i], n), x.values, p.weight.values, p.bias.values,
                                y.values);
        break;
      }
      case LayerKind::maxpool2:
        cache.pool_argmax[i].resize(y.size());
        kernels::maxpool2_forward(pool_dims(shapes[i], n), x.values, y.values, cache.pool_argmax[i]);
        break;
      case LayerKind::relu:
        for (std::size_t j = 0; j < x.size(); ++j) y[j] = x[j] > 0.0 ? x[j] : 0.0;
        break;
      case LayerKind::sigmoid:
        for (std::size_t j = 0; j < x.size(); ++j) y[j] = sigmoid(x[j]);
        break;
      case LayerKind::softplus_plus_one:
        for (std::size_t j = 0; j < x.size(); ++j) y[j] = 1.0 + softplus(x[j]);
        break;
      case LayerKind::flatten:
        y.values = x.values;
        break;
      case LayerKind::softmax_ce_head:
        for (std::size_t r = 0; r < n; ++r) {
          const auto z = x.row(r);
          auto p = y.row(r);
          const double hi = *std::max_element(z.begin(), z.end());
          double total = 0.0;
          for (std::size_t k = 0; k < z.size(); ++k) total += (p[k] = std::exp(z[k] - hi));
          for (double& v : p) v /= total;
        }
        break;
    }
    cache.activations.push_back(std::move(y));
  }
  return cache;
}

Tensor predict(const NetworkSpec& spec, const Parameters& params, const Tensor& inputs,
               std::size_t batch_size) {
  const std::size_t n = inputs.rows();
  if (n == 0) throw EmptyInputError("predict: no inputs");
  const std::size_t out_size = spec.output_size();
  Tensor out({n, out_size});
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t count = std::min(batch_size, n - start);
    const auto cache = forward(spec, params, inputs.slice_rows(start, count));
    std::copy(cache.output().values.begin(), cache.output().values.end(),
              out.values.begin() + static_cast<std::ptrdiff_t>(start * out_size));
  }
  return out;
}

Gradients backward(const NetworkSpec& spec, const Parameters& params, const ForwardCache& cache,
                   const Tensor& upstream, GradientAt at, bool want_input_gradient) {
  const std::size_t layers = spec.layers.size();
  if (cache.activations.size() != layers + 1) throw std::logic_error("backward: forward cache missing");
  const std::size_t n = cache.activations[0].rows();
  const auto shapes = spec.layer_shapes();

  Gradients grads{zeros_like(params), {}};

  // Layers below the lowest trainable one only matter for the input gradient.
  std::size_t stop = layers;
  for (std::size_t i = 0; i < layers; ++i) {
    if (spec.layers[i].has_parameters() && spec.layers[i].trainable) {
      stop = i;
      break;
    }
  }
  if (want_input_gradient) stop = 0;

  std::size_t top = layers;  // gradient currently refers to activations[top]
  if (at == GradientAt::head_input) top = layers - 1;
  const Tensor& target = cache.activations[top];
  if (upstream.size() != target.size()) {
    throw ShapeError("backward: upstream gradient " + shape_string(upstream.shape) + " vs activation " +
                     shape_string(target.shape));
  }
  std::vector<double> g = upstream.values;

  for (std::size_t i = top; i-- > stop;) {
    const auto& l = spec.layers[i];
    const Tensor& x = cache.activations[i];
    const Tensor& y = cache.activations[i + 1];
    const bool need_dx = i > stop || want_input_gradient;
    std::vector<double> dx(need_dx ? x.size() : 0);
    switch (l.kind) {
      case LayerKind::dense:
      case LayerKind::conv2d: {
        const auto& p = params.layers[i];
        LayerParams scratch;
        LayerParams& out = l.trainable ? grads.params.layers[i] : scratch;
        if (!l.trainable) out = {Tensor(p.weight.shape), Tensor(p.bias.shape)};
        if (l.kind == LayerKind::dense) {
          kernels::dense_backward(dense_dims(l, n), x.values, p.weight.values, g, dx, out.weight.values,
                                  out.bias.values);
        } else {
          kernels::conv2d_backward(conv_dims(l, shapes[i], n), x.values, p.weight.values, g, dx,
                                   out.weight.values, out.bias.values);
        }
        break;
      }
      case LayerKind::maxpool2:
        if (need_dx) kernels::maxpool2_backward(pool_dims(shapes[i], n), g, cache.pool_argmax[i], dx);
        break;
      case LayerKind::relu:
        for (std::size_t j = 0; j < dx.size(); ++j) dx[j] = x[j] > 0.0 ? g[j] : 0.0;
        break;
      case LayerKind::sigmoid:
        for (std::size_t j = 0; j < dx.size(); ++j) dx[j] = g[j] * y[j] * (1.0 - y[j]);
        break;
      case LayerKind::softplus_plus_one:
        for (std::size_t j = 0; j < dx.size(); ++j) dx[j] = g[j] * sigmoid(x[j]);
        break;
      case LayerKind::flatten:
        dx = g;
        break;
      case LayerKind::softmax_ce_head: {
        const std::size_t k = y.row_size();
        for (std::size_t r = 0; r < n && need_dx; ++r) {
          double dot = 0.0;
          for (std::size_t j = 0; j < k; ++j) dot += g[r * k + j] * y[r * k + j];
          for (std::size_t j = 0; j < k; ++j) dx[r * k + j] = y[r * k + j] * (g[r * k + j] - dot);
        }
        break;
      }
    }
    g = std::move(dx);
  }
  if (want_input_gradient) grads.input = Tensor(cache.activations[0].shape, std::move(g));
  return grads;
}

GradcheckReport gradcheck(const NetworkSpec& spec, const Parameters& params, const LossFn& loss,
                          const Tensor& batch, double tolerance, double step) {
  constexpr double kFloor = 1e-6;
  const auto cache = forward(spec, params, batch);
  const HeadLoss head = loss(cache);
  const Gradients analytic = backward(spec, params, cache, head.grad, head.at);

  GradcheckReport report;
  Parameters probe = params;
  auto value_at = [&]() { return loss(forward(spec, probe, batch)).value; };

  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    if (!spec.layers[i].has_parameters() || !spec.layers[i].trainable) continue;
    for (int which = 0; which < 2; ++which) {
      Tensor& t = which == 0 ? probe.layers[i].weight : probe.layers[i].bias;
      const Tensor& a = which == 0 ? analytic.params.layers[i].weight : analytic.params.layers[i].bias;
      for (std::size_t j = 0; j < t.size(); ++j) {
        const double saved = t[j];
        const double h = step * std::max(1.0, std::abs(saved));
        t[j] = saved + h;
        const double up = value_at();
        t[j] = saved - h;
        const double down = value_at();
        t[j] = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double abs_err = std::abs(numeric - a[j]);
        const double rel_err = abs_err / std::max({std::abs(numeric), std::abs(a[j]), kFloor});
        ++report.checked;
        report.max_abs_error = std::max(report.max_abs_error, abs_err);
        if (rel_err > report.max_rel_error) {
          report.max_rel_error = rel_err;
          report.worst_layer = i;
          report.worst_index = j;
        }
      }
    }
  }
  report.passed = report.max_rel_error <= tolerance;
  return report;
}

}  // namespace iadfp
