#include "skinbench/network.hpp"

#include <algorithm>
#include <cstring>
#include <limits>

#include "skinbench/error.hpp"

namespace skinbench {

namespace {

std::string_view kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv2D: return "conv2d";
    case LayerKind::DepthwiseConv2D: return "depthwise_conv2d";
    case LayerKind::Affine: return "affine";
    case LayerKind::ReLU: return "relu";
    case LayerKind::ReLU6: return "relu6";
    case LayerKind::MaxPool2D: return "max_pool2d";
    case LayerKind::ZeroPad2D: return "zero_pad2d";
    case LayerKind::GlobalAvgPool: return "global_avg_pool";
  }
  return "?";
}

LayerKind kind_from_name(const std::string& name) {
  for (auto kind : {LayerKind::Conv2D, LayerKind::DepthwiseConv2D, LayerKind::Affine, LayerKind::ReLU,
                    LayerKind::ReLU6, LayerKind::MaxPool2D, LayerKind::ZeroPad2D, LayerKind::GlobalAvgPool}) {
    if (kind_name(kind) == name) return kind;
  }
  throw Error(ErrorKind::CorruptArtifact, "unknown layer kind '" + name + "'");
}

ConvGeometry geometry_for(const LayerConfig& cfg, const Shape4& in) {
  return conv_geometry(in.h, in.w, cfg.kernel, cfg.kernel, cfg.stride, cfg.padding);
}

Error shape_error(std::size_t layer, const std::string& what) {
  Error e(ErrorKind::ShapeMismatch, "layer " + std::to_string(layer) + ": " + what);
  e.with_index(layer);
  return e;
}

std::vector<std::size_t> expected_param_sizes(const LayerConfig& cfg, int in_channels) {
  const auto k2 = static_cast<std::size_t>(cfg.kernel) * cfg.kernel;
  switch (cfg.kind) {
    case LayerKind::Conv2D:
      if (cfg.use_bias) return {k2 * in_channels * cfg.filters, static_cast<std::size_t>(cfg.filters)};
      return {k2 * in_channels * cfg.filters};
    case LayerKind::DepthwiseConv2D:
      if (cfg.use_bias) return {k2 * in_channels, static_cast<std::size_t>(in_channels)};
      return {k2 * in_channels};
    case LayerKind::Affine:
      return {static_cast<std::size_t>(in_channels), static_cast<std::size_t>(in_channels)};
    default:
      return {};
  }
}

Shape4 layer_output_shape(const LayerConfig& cfg, const Shape4& in) {
  switch (cfg.kind) {
    case LayerKind::Conv2D: {
      const auto g = geometry_for(cfg, in);
      return {in.n, g.out_h, g.out_w, cfg.filters};
    }
    case LayerKind::DepthwiseConv2D:
    case LayerKind::MaxPool2D: {
      const auto g = geometry_for(cfg, in);
      return {in.n, g.out_h, g.out_w, in.c};
    }
    case LayerKind::ZeroPad2D:
      return {in.n, in.h + cfg.pad_top + cfg.pad_bottom, in.w + cfg.pad_left + cfg.pad_right, in.c};
    case LayerKind::GlobalAvgPool:
      return {in.n, 1, 1, in.c};
    default:
      return in;
  }
}

std::span<const float> bias_of(const Layer& layer) {
  if (layer.params.size() > 1) return layer.params[1];
  return {};
}

Tensor zero_pad(const Tensor& in, const LayerConfig& cfg) {
  Tensor out(layer_output_shape(cfg, in.shape()));
  const int n = in.n();
#pragma omp parallel for collapse(2) schedule(static)
  for (int b = 0; b < n; ++b) {
    for (int y = 0; y < in.h(); ++y) {
      const float* src = in.item(b).data() + static_cast<std::size_t>(y) * in.w() * in.c();
      std::copy(src, src + static_cast<std::size_t>(in.w()) * in.c(), &out.at(b, y + cfg.pad_top, cfg.pad_left, 0));
    }
  }
  return out;
}

Tensor crop(const Tensor& grad, const Shape4& in_shape, const LayerConfig& cfg) {
  Tensor out(in_shape);
#pragma omp parallel for collapse(2) schedule(static)
  for (int b = 0; b < in_shape.n; ++b) {
    for (int y = 0; y < in_shape.h; ++y) {
      const float* src = grad.item(b).data() +
                         (static_cast<std::size_t>(y + cfg.pad_top) * grad.w() + cfg.pad_left) * grad.c();
      std::copy(src, src + static_cast<std::size_t>(in_shape.w) * in_shape.c, &out.at(b, y, 0, 0));
    }
  }
  return out;
}

Tensor layer_forward(const Layer& layer, const Tensor& in) {
  const auto& cfg = layer.config;
  Tensor out;
  switch (cfg.kind) {
    case LayerKind::Conv2D:
      kernels::conv2d_forward(in, layer.params[0], bias_of(layer), geometry_for(cfg, in.shape()), cfg.filters, out);
      return out;
    case LayerKind::DepthwiseConv2D:
      kernels::depthwise_forward(in, layer.params[0], bias_of(layer), geometry_for(cfg, in.shape()), out);
      return out;
    case LayerKind::Affine: {
      out = Tensor(in.shape());
      const int c = in.c();
      const auto total = static_cast<std::int64_t>(in.size() / c);
      const float* scale = layer.params[0].data();
      const float* shift = layer.params[1].data();
#pragma omp parallel for schedule(static)
      for (std::int64_t p = 0; p < total; ++p) {
        for (int ch = 0; ch < c; ++ch) out.data()[p * c + ch] = in.data()[p * c + ch] * scale[ch] + shift[ch];
      }
      return out;
    }
    case LayerKind::ReLU:
    case LayerKind::ReLU6: {
      out = Tensor(in.shape());
      const float cap = cfg.kind == LayerKind::ReLU6 ? 6.0f : std::numeric_limits<float>::infinity();
      const auto total = static_cast<std::int64_t>(in.size());
#pragma omp parallel for simd schedule(static)
      for (std::int64_t i = 0; i < total; ++i) out.data()[i] = std::min(std::max(in.data()[i], 0.0f), cap);
      return out;
    }
    case LayerKind::MaxPool2D:
      kernels::max_pool_forward(in, geometry_for(cfg, in.shape()), out);
      return out;
    case LayerKind::ZeroPad2D:
      return zero_pad(in, cfg);
    case LayerKind::GlobalAvgPool:
      kernels::global_avg_pool_forward(in, out);
      return out;
  }
  return out;
}

// grads holds this layer's parameter gradients; returns the input gradient when asked.
Tensor layer_backward(const Layer& layer, const Tensor& in, const Tensor& grad_out,
                      std::vector<std::vector<float>>& grads, bool want_input) {
  const auto& cfg = layer.config;
  Tensor grad_in;
  switch (cfg.kind) {
    case LayerKind::Conv2D: {
      std::span<float> gb = grads.size() > 1 ? std::span<float>(grads[1]) : std::span<float>();
      kernels::conv2d_backward(in, layer.params[0], geometry_for(cfg, in.shape()), grad_out,
                               want_input ? &grad_in : nullptr, grads[0], gb);
      return grad_in;
    }
    case LayerKind::DepthwiseConv2D: {
      std::span<float> gb = grads.size() > 1 ? std::span<float>(grads[1]) : std::span<float>();
      kernels::depthwise_backward(in, layer.params[0], geometry_for(cfg, in.shape()), grad_out,
                                  want_input ? &grad_in : nullptr, grads[0], gb);
      return grad_in;
    }
    case LayerKind::Affine: {
      const int c = in.c();
      const auto total = static_cast<std::int64_t>(in.size() / c);
      const float* g = grad_out.data();
      const float* x = in.data();
#pragma omp parallel for schedule(static)
      for (int ch = 0; ch < c; ++ch) {
        float ds = 0.0f;
        float dt = 0.0f;
        for (std::int64_t p = 0; p < total; ++p) {
          ds += g[p * c + ch] * x[p * c + ch];
          dt += g[p * c + ch];
        }
        grads[0][ch] = ds;
        grads[1][ch] = dt;
      }
      if (!want_input) return grad_in;
      grad_in = Tensor(in.shape());
      const float* scale = layer.params[0].data();
#pragma omp parallel for schedule(static)
      for (std::int64_t p = 0; p < total; ++p) {
        for (int ch = 0; ch < c; ++ch) grad_in.data()[p * c + ch] = g[p * c + ch] * scale[ch];
      }
      return grad_in;
    }
    case LayerKind::ReLU:
    case LayerKind::ReLU6: {
      if (!want_input) return grad_in;
      grad_in = Tensor(in.shape());
      const float cap = cfg.kind == LayerKind::ReLU6 ? 6.0f : std::numeric_limits<float>::infinity();
      const auto total = static_cast<std::int64_t>(in.size());
#pragma omp parallel for simd schedule(static)
      for (std::int64_t i = 0; i < total; ++i) {
        const float v = in.data()[i];
        grad_in.data()[i] = (v > 0.0f && v < cap) ? grad_out.data()[i] : 0.0f;
      }
      return grad_in;
    }
    case LayerKind::MaxPool2D:
      if (want_input) kernels::max_pool_backward(in, geometry_for(cfg, in.shape()), grad_out, grad_in);
      return grad_in;
    case LayerKind::ZeroPad2D:
      if (want_input) grad_in = crop(grad_out, in.shape(), cfg);
      return grad_in;
    case LayerKind::GlobalAvgPool:
      if (want_input) {
        grad_in = Tensor(in.shape());
        kernels::global_avg_pool_backward(grad_out, grad_in);
      }
      return grad_in;
  }
  return grad_in;
}

}  // namespace

nlohmann::json layer_to_json(const LayerConfig& layer) {
  nlohmann::json doc;
  doc["kind"] = kind_name(layer.kind);
  switch (layer.kind) {
    case LayerKind::Conv2D:
      doc["filters"] = layer.filters;
      [[fallthrough]];
    case LayerKind::DepthwiseConv2D:
      doc["use_bias"] = layer.use_bias;
      [[fallthrough]];
    case LayerKind::MaxPool2D:
      doc["kernel"] = layer.kernel;
      doc["stride"] = layer.stride;
      doc["padding"] = layer.padding == Padding::Same ? "same" : "valid";
      break;
    case LayerKind::ZeroPad2D:
      doc["pad"] = {layer.pad_top, layer.pad_bottom, layer.pad_left, layer.pad_right};
      break;
    default:
      break;
  }
  return doc;
}

LayerConfig layer_from_json(const nlohmann::json& doc) {
  LayerConfig layer;
  layer.kind = kind_from_name(doc.at("kind").get<std::string>());
  layer.filters = doc.value("filters", 0);
  layer.use_bias = doc.value("use_bias", false);
  layer.kernel = doc.value("kernel", 1);
  layer.stride = doc.value("stride", 1);
  layer.padding = doc.value("padding", std::string("valid")) == "same" ? Padding::Same : Padding::Valid;
  if (doc.contains("pad")) {
    const auto pad = doc.at("pad").get<std::vector<int>>();
    if (pad.size() != 4) throw Error(ErrorKind::CorruptArtifact, "zero_pad2d needs four pad values");
    layer.pad_top = pad[0];
    layer.pad_bottom = pad[1];
    layer.pad_left = pad[2];
    layer.pad_right = pad[3];
  }
  if (layer.kernel < 1 || layer.stride < 1 || (layer.kind == LayerKind::Conv2D && layer.filters < 1)) {
    throw Error(ErrorKind::CorruptArtifact, "invalid layer geometry");
  }
  return layer;
}

void Network::allocate(int in_channels) {
  int channels = in_channels;
  for (auto& layer : layers_) {
    const auto sizes = expected_param_sizes(layer.config, channels);
    layer.params.clear();
    for (std::size_t s : sizes) layer.params.emplace_back(s, 0.0f);
    if (layer.config.kind == LayerKind::Affine) std::fill(layer.params[0].begin(), layer.params[0].end(), 1.0f);
    if (layer.config.kind == LayerKind::Conv2D) channels = layer.config.filters;
  }
}

Shape4 Network::output_shape(Shape4 input) const {
  Shape4 shape = input;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& layer = layers_[i];
    const auto sizes = expected_param_sizes(layer.config, shape.c);
    if (sizes.size() != layer.params.size()) throw shape_error(i, "wrong number of parameter tensors");
    for (std::size_t p = 0; p < sizes.size(); ++p) {
      if (layer.params[p].size() != sizes[p]) throw shape_error(i, "parameter size does not match graph");
    }
    shape = layer_output_shape(layer.config, shape);
    if (shape.h <= 0 || shape.w <= 0) throw shape_error(i, "spatial size collapsed to zero");
  }
  return shape;
}

Tensor Network::forward(const Tensor& input) const {
  Tensor x = input;
  for (const auto& layer : layers_) x = layer_forward(layer, x);
  return x;
}

Tensor Network::forward(const Tensor& input, Trace& trace) const {
  trace.activations.clear();
  trace.activations.reserve(layers_.size() + 1);
  trace.activations.push_back(input);
  for (const auto& layer : layers_) trace.activations.push_back(layer_forward(layer, trace.activations.back()));
  return trace.activations.back();
}

Tensor Network::backward(const Trace& trace, const Tensor& grad_output, Gradients& grads, bool want_input_grad) const {
  Tensor grad = grad_output;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    const bool want_input = i > 0 || want_input_grad;
    grad = layer_backward(layers_[i], trace.activations[i], grad, grads[i], want_input);
  }
  return grad;
}

Gradients Network::zero_gradients() const {
  Gradients grads(layers_.size());
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    for (const auto& p : layers_[i].params) grads[i].emplace_back(p.size(), 0.0f);
  }
  return grads;
}

std::size_t Network::parameter_count() const {
  std::size_t total = 0;
  for (const auto& layer : layers_)
    for (const auto& p : layer.params) total += p.size();
  return total;
}

std::uint64_t Network::checksum() const {
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& layer : layers_) {
    for (const auto& p : layer.params) {
      const auto* bytes = reinterpret_cast<const unsigned char*>(p.data());
      for (std::size_t i = 0; i < p.size() * sizeof(float); ++i) {
        h ^= bytes[i];
        h *= 1099511628211ull;
      }
    }
  }
  return h;
}

}  // namespace skinbench
