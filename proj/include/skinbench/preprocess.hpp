#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "skinbench/dataset.hpp"
#include "skinbench/tensor.hpp"

namespace skinbench {

enum class ValueRange {
  Unit,       // [0, 1]: v / 255
  Symmetric,  // [-1, 1]: v / 127.5 - 1
};

std::string_view to_string(ValueRange range);
ValueRange value_range_from_string(std::string_view text);

struct InputSpec {
  int height = 224;
  int width = 224;
  int channels = 3;
  ValueRange value_range = ValueRange::Unit;

  friend bool operator==(const InputSpec&, const InputSpec&) = default;
};

/// A single preprocessed image, shape (1, height, width, 3).
struct InputTensor {
  Tensor data;
  InputSpec spec;
};

/// Input geometry for a registered backbone. Throws UnknownBackbone.
InputSpec required_input(std::string_view backbone_id);

float normalize_pixel(float value, ValueRange range);

/// Bilinear stretch to the spec geometry followed by value-range normalisation.
InputTensor preprocess_image(const ImageBuffer& image, const InputSpec& spec);

struct Batch {
  Tensor images;            // (n, h, w, 3)
  std::vector<int> labels;  // class_index per sample, input order
};

/// Decodes and preprocesses in parallel; output order equals input order. A decode
/// failure is rethrown with the index of the lowest failing sample.
Batch preprocess_batch(std::span<const ImageSample> samples, const InputSpec& spec);

}  // namespace skinbench
