#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "skinbench/tensor.hpp"

namespace skinbench::kernels::detail {

struct AxisSample {
  int lo = 0;
  int hi = 0;
  float t = 0.0f;
};

// Half-pixel centres, clamped at the borders. Equal sizes give t == 0 everywhere.
inline std::vector<AxisSample> resize_axis(int in_size, int out_size) {
  std::vector<AxisSample> samples(out_size);
  const double scale = static_cast<double>(in_size) / out_size;
  for (int i = 0; i < out_size; ++i) {
    double pos = (i + 0.5) * scale - 0.5;
    pos = std::clamp(pos, 0.0, static_cast<double>(in_size - 1));
    const int lo = static_cast<int>(std::floor(pos));
    samples[i].lo = lo;
    samples[i].hi = std::min(lo + 1, in_size - 1);
    samples[i].t = static_cast<float>(pos - lo);
  }
  return samples;
}

// a + (b - a) * t keeps constant regions exact.
inline float lerp(float a, float b, float t) { return a + (b - a) * t; }

inline float bilinear_sample(const ImageBuffer& src, const AxisSample& ry, const AxisSample& rx, int ch) {
  const float top = lerp(src.at(ry.lo, rx.lo, ch), src.at(ry.lo, rx.hi, ch), rx.t);
  const float bottom = lerp(src.at(ry.hi, rx.lo, ch), src.at(ry.hi, rx.hi, ch), rx.t);
  return lerp(top, bottom, ry.t);
}

}  // namespace skinbench::kernels::detail
