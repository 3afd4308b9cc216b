#include <algorithm>

#include "skinbench/kernels.hpp"

namespace skinbench {

ConvGeometry conv_geometry(int in_h, int in_w, int kernel_h, int kernel_w, int stride, Padding padding) {
  ConvGeometry g;
  g.kernel_h = kernel_h;
  g.kernel_w = kernel_w;
  g.stride = stride;
  g.in_h = in_h;
  g.in_w = in_w;
  if (padding == Padding::Valid) {
    g.out_h = in_h >= kernel_h ? (in_h - kernel_h) / stride + 1 : 0;
    g.out_w = in_w >= kernel_w ? (in_w - kernel_w) / stride + 1 : 0;
    return g;
  }
  g.out_h = (in_h + stride - 1) / stride;
  g.out_w = (in_w + stride - 1) / stride;
  const int pad_h = std::max((g.out_h - 1) * stride + kernel_h - in_h, 0);
  const int pad_w = std::max((g.out_w - 1) * stride + kernel_w - in_w, 0);
  g.pad_top = pad_h / 2;
  g.pad_left = pad_w / 2;
  return g;
}

}  // namespace skinbench
