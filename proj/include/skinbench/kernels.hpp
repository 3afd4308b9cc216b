#pragma once

// Compute kernels used by the backbone interpreter, the classifier head and
// evaluation. Every kernel exists twice:
//
//   skinbench::kernels          OpenMP-parallel, used at runtime.
//   skinbench::kernels::serial  straightforward single-threaded reference,
//                               kept for tests and the benchmark target.
//
// Parallel kernels assign each output element to exactly one thread and sum in
// a fixed order, so results do not depend on the thread count.

#include <cstdint>
#include <span>

#include "skinbench/tensor.hpp"

namespace skinbench {

enum class Padding { Valid, Same };

struct ConvGeometry {
  int kernel_h = 1;
  int kernel_w = 1;
  int stride = 1;
  int pad_top = 0;
  int pad_left = 0;
  int in_h = 0;
  int in_w = 0;
  int out_h = 0;
  int out_w = 0;
};

/// TF/Keras padding convention: "same" puts the odd padding row/column at the bottom/right.
ConvGeometry conv_geometry(int in_h, int in_w, int kernel_h, int kernel_w, int stride, Padding padding);

namespace kernels {

// Weights are HWIO ([kh][kw][cin][cout]); bias may be empty.
void conv2d_forward(const Tensor& in, std::span<const float> weights, std::span<const float> bias,
                    const ConvGeometry& g, int out_channels, Tensor& out);
// grad_in may be null. grad_w/grad_b are overwritten, not accumulated.
void conv2d_backward(const Tensor& in, std::span<const float> weights, const ConvGeometry& g,
                     const Tensor& grad_out, Tensor* grad_in, std::span<float> grad_w,
                     std::span<float> grad_b);

// Depth multiplier 1; weights are [kh][kw][c].
void depthwise_forward(const Tensor& in, std::span<const float> weights, std::span<const float> bias,
                       const ConvGeometry& g, Tensor& out);
void depthwise_backward(const Tensor& in, std::span<const float> weights, const ConvGeometry& g,
                        const Tensor& grad_out, Tensor* grad_in, std::span<float> grad_w,
                        std::span<float> grad_b);

void max_pool_forward(const Tensor& in, const ConvGeometry& g, Tensor& out);
void max_pool_backward(const Tensor& in, const ConvGeometry& g, const Tensor& grad_out, Tensor& grad_in);

void global_avg_pool_forward(const Tensor& in, Tensor& out);
void global_avg_pool_backward(const Tensor& grad_out, Tensor& grad_in);

// x is (n x d) with h = w = 1, weights are [d][k] row-major.
void dense_forward(const Tensor& x, std::span<const float> weights, std::span<const float> bias, int k,
                   Tensor& out);
void dense_backward(const Tensor& x, std::span<const float> weights, const Tensor& grad_out,
                    Tensor* grad_x, std::span<float> grad_w, std::span<float> grad_b);

/// Half-pixel-centre bilinear resize of an 8-bit image; output values stay in [0, 255].
void resize_bilinear(const ImageBuffer& src, int out_h, int out_w, std::span<float> out);

/// counts is K*K row-major with rows = predicted, columns = actual; overwritten.
void confusion_tally(std::span<const int> predicted, std::span<const int> actual, int k,
                     std::span<std::int64_t> counts);

namespace serial {

void conv2d_forward(const Tensor& in, std::span<const float> weights, std::span<const float> bias,
                    const ConvGeometry& g, int out_channels, Tensor& out);
void conv2d_backward(const Tensor& in, std::span<const float> weights, const ConvGeometry& g,
                     const Tensor& grad_out, Tensor* grad_in, std::span<float> grad_w,
                     std::span<float> grad_b);
void depthwise_forward(const Tensor& in, std::span<const float> weights, std::span<const float> bias,
                       const ConvGeometry& g, Tensor& out);
void depthwise_backward(const Tensor& in, std::span<const float> weights, const ConvGeometry& g,
                        const Tensor& grad_out, Tensor* grad_in, std::span<float> grad_w,
                        std::span<float> grad_b);
void max_pool_forward(const Tensor& in, const ConvGeometry& g, Tensor& out);
void max_pool_backward(const Tensor& in, const ConvGeometry& g, const Tensor& grad_out, Tensor& grad_in);
void global_avg_pool_forward(const Tensor& in, Tensor& out);
void global_avg_pool_backward(const Tensor& grad_out, Tensor& grad_in);
void dense_forward(const Tensor& x, std::span<const float> weights, std::span<const float> bias, int k,
                   Tensor& out);
void dense_backward(const Tensor& x, std::span<const float> weights, const Tensor& grad_out,
                    Tensor* grad_x, std::span<float> grad_w, std::span<float> grad_b);
void resize_bilinear(const ImageBuffer& src, int out_h, int out_w, std::span<float> out);
void confusion_tally(std::span<const int> predicted, std::span<const int> actual, int k,
                     std::span<std::int64_t> counts);

}  // namespace serial
}  // namespace kernels
}  // namespace skinbench
