#include "skinbench/preprocess.hpp"

#include <algorithm>
#include <exception>
#include <optional>

#include "skinbench/error.hpp"
#include "skinbench/image_io.hpp"
#include "skinbench/kernels.hpp"

namespace skinbench {

std::string_view to_string(ValueRange range) {
  return range == ValueRange::Unit ? "unit" : "symmetric";
}

ValueRange value_range_from_string(std::string_view text) {
  if (text == "unit") return ValueRange::Unit;
  if (text == "symmetric") return ValueRange::Symmetric;
  throw Error(ErrorKind::BadConfig, "unknown value range '" + std::string(text) + "'");
}

float normalize_pixel(float value, ValueRange range) {
  if (range == ValueRange::Unit) return std::clamp(value / 255.0f, 0.0f, 1.0f);
  return std::clamp(value / 127.5f - 1.0f, -1.0f, 1.0f);
}

namespace {

void fill_item(const ImageBuffer& image, const InputSpec& spec, std::span<float> out) {
  kernels::resize_bilinear(image, spec.height, spec.width, out);
  for (float& v : out) v = normalize_pixel(v, spec.value_range);
}

}  // namespace

InputTensor preprocess_image(const ImageBuffer& image, const InputSpec& spec) {
  if (image.empty()) throw Error(ErrorKind::EmptyImage, "image has no pixels");
  InputTensor result{Tensor({1, spec.height, spec.width, 3}), spec};
  fill_item(image, spec, result.data.item(0));
  return result;
}

Batch preprocess_batch(std::span<const ImageSample> samples, const InputSpec& spec) {
  const int n = static_cast<int>(samples.size());
  Batch batch{Tensor({n, spec.height, spec.width, 3}), std::vector<int>(samples.size())};
  std::vector<std::exception_ptr> failures(samples.size());

#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      const ImageBuffer image = load_image(samples[i].path);
      if (image.empty()) throw Error(ErrorKind::EmptyImage, samples[i].path.string());
      fill_item(image, spec, batch.images.item(i));
      batch.labels[i] = samples[i].class_index;
    } catch (...) {
      failures[i] = std::current_exception();
    }
  }

  for (int i = 0; i < n; ++i) {
    if (!failures[i]) continue;
    try {
      std::rethrow_exception(failures[i]);
    } catch (Error& e) {
      Error tagged(e.kind(), "sample " + std::to_string(i) + ": " + e.what());
      tagged.with_index(static_cast<std::size_t>(i));
      if (e.path()) tagged.with_path(*e.path());
      throw tagged;
    }
  }
  return batch;
}

}  // namespace skinbench
