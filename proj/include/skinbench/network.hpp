#pragma once

// Sequential layer-graph interpreter for backbone feature extractors. The graph
// and its parameters come either from the seeded random-init generator or from
// a weight file in the pretrained-weight cache.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "skinbench/kernels.hpp"
#include "skinbench/tensor.hpp"

namespace skinbench {

enum class LayerKind {
  Conv2D,
  DepthwiseConv2D,
  Affine,  // per-channel scale and shift (inference-mode batch norm)
  ReLU,
  ReLU6,
  MaxPool2D,
  ZeroPad2D,
  GlobalAvgPool,
};

struct LayerConfig {
  LayerKind kind = LayerKind::ReLU;
  int filters = 0;  // Conv2D output channels
  int kernel = 1;
  int stride = 1;
  Padding padding = Padding::Valid;
  bool use_bias = false;
  int pad_top = 0;  // ZeroPad2D
  int pad_bottom = 0;
  int pad_left = 0;
  int pad_right = 0;
};

nlohmann::json layer_to_json(const LayerConfig& layer);
LayerConfig layer_from_json(const nlohmann::json& doc);

struct Layer {
  LayerConfig config;
  // Conv2D: {kernel HWIO, [bias]}; DepthwiseConv2D: {kernel HWC, [bias]};
  // Affine: {scale, shift}; other kinds have none.
  std::vector<std::vector<float>> params;
};

/// Activations recorded by a training forward pass, one per layer input plus the output.
struct Trace {
  std::vector<Tensor> activations;
};

/// Parameter gradients with the same nesting as Network::layers()[i].params.
using Gradients = std::vector<std::vector<std::vector<float>>>;

class Network {
 public:
  Network() = default;
  explicit Network(std::vector<Layer> layers) : layers_(std::move(layers)) {}

  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }

  /// Allocates parameter storage for the given input channel count: affine scales
  /// start at 1, everything else at 0.
  void allocate(int in_channels);

  /// Throws ShapeMismatch when a parameter does not fit the graph.
  Shape4 output_shape(Shape4 input) const;

  Tensor forward(const Tensor& input) const;
  Tensor forward(const Tensor& input, Trace& trace) const;
  /// Returns d(loss)/d(input) only when want_input_grad is set.
  Tensor backward(const Trace& trace, const Tensor& grad_output, Gradients& grads, bool want_input_grad = false) const;

  Gradients zero_gradients() const;
  std::size_t parameter_count() const;
  /// FNV-1a over the raw parameter bytes.
  std::uint64_t checksum() const;

 private:
  std::vector<Layer> layers_;
};

}  // namespace skinbench
