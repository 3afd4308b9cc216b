#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace skinbench {

/// Decoded 8-bit RGB image, row-major, interleaved channels (height x width x 3).
struct ImageBuffer {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> pixels;

  ImageBuffer() = default;
  ImageBuffer(int h, int w) : height(h), width(w), pixels(static_cast<std::size_t>(h) * w * 3) {}

  std::uint8_t& at(int y, int x, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  std::uint8_t at(int y, int x, int c) const { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  bool empty() const { return height <= 0 || width <= 0; }
};

struct Shape4 {
  int n = 0;
  int h = 0;
  int w = 0;
  int c = 0;

  std::size_t size() const { return static_cast<std::size_t>(n) * h * w * c; }
  friend bool operator==(const Shape4&, const Shape4&) = default;
};

/// Dense float tensor in NHWC layout. Rank-2 data (batch x features) uses h = w = 1.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape4 shape, float fill = 0.0f) : shape_(shape), data_(shape.size(), fill) {}

  const Shape4& shape() const { return shape_; }
  int n() const { return shape_.n; }
  int h() const { return shape_.h; }
  int w() const { return shape_.w; }
  int c() const { return shape_.c; }
  std::size_t size() const { return data_.size(); }
  std::size_t item_size() const { return static_cast<std::size_t>(shape_.h) * shape_.w * shape_.c; }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  std::span<float> values() { return data_; }
  std::span<const float> values() const { return data_; }

  std::span<float> item(int i) { return {data_.data() + i * item_size(), item_size()}; }
  std::span<const float> item(int i) const { return {data_.data() + i * item_size(), item_size()}; }

  float& at(int i, int y, int x, int ch) { return data_[index(i, y, x, ch)]; }
  float at(int i, int y, int x, int ch) const { return data_[index(i, y, x, ch)]; }

  void reshape(Shape4 shape) { shape_ = shape; }

 private:
  std::size_t index(int i, int y, int x, int ch) const {
    return ((static_cast<std::size_t>(i) * shape_.h + y) * shape_.w + x) * shape_.c + ch;
  }

  Shape4 shape_;
  std::vector<float> data_;
};

}  // namespace skinbench
