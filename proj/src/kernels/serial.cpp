// Reference kernels: plain loops in textbook order, scatter-style backward
// passes. Slow on purpose; the parallel versions are checked against these.

#include <algorithm>
#include <cmath>
#include <limits>

#include "skinbench/kernels.hpp"

namespace skinbench::kernels::serial {

namespace {

bool inside(int v, int limit) { return v >= 0 && v < limit; }

}  // namespace

void conv2d_forward(const Tensor& in, std::span<const float> weights, std::span<const float> bias,
                    const ConvGeometry& g, int out_channels, Tensor& out) {
  const int cin = in.c();
  out = Tensor({in.n(), g.out_h, g.out_w, out_channels});
  for (int b = 0; b < in.n(); ++b)
    for (int co = 0; co < out_channels; ++co)
      for (int oy = 0; oy < g.out_h; ++oy)
        for (int ox = 0; ox < g.out_w; ++ox) {
          double acc = bias.empty() ? 0.0 : bias[co];
          for (int ky = 0; ky < g.kernel_h; ++ky)
            for (int kx = 0; kx < g.kernel_w; ++kx)
              for (int ci = 0; ci < cin; ++ci) {
                const int iy = oy * g.stride - g.pad_top + ky;
                const int ix = ox * g.stride - g.pad_left + kx;
                if (!inside(iy, g.in_h) || !inside(ix, g.in_w)) continue;
                acc += static_cast<double>(in.at(b, iy, ix, ci)) *
                       weights[((ky * g.kernel_w + kx) * cin + ci) * out_channels + co];
              }
          out.at(b, oy, ox, co) = static_cast<float>(acc);
        }
}

void conv2d_backward(const Tensor& in, std::span<const float> weights, const ConvGeometry& g,
                     const Tensor& grad_out, Tensor* grad_in, std::span<float> grad_w,
                     std::span<float> grad_b) {
  const int cin = in.c();
  const int cout = grad_out.c();
  std::fill(grad_w.begin(), grad_w.end(), 0.0f);
  std::fill(grad_b.begin(), grad_b.end(), 0.0f);
  if (grad_in != nullptr) *grad_in = Tensor(in.shape());
  for (int b = 0; b < in.n(); ++b)
    for (int oy = 0; oy < g.out_h; ++oy)
      for (int ox = 0; ox < g.out_w; ++ox)
        for (int co = 0; co < cout; ++co) {
          const float go = grad_out.at(b, oy, ox, co);
          if (!grad_b.empty()) grad_b[co] += go;
          for (int ky = 0; ky < g.kernel_h; ++ky)
            for (int kx = 0; kx < g.kernel_w; ++kx) {
              const int iy = oy * g.stride - g.pad_top + ky;
              const int ix = ox * g.stride - g.pad_left + kx;
              if (!inside(iy, g.in_h) || !inside(ix, g.in_w)) continue;
              for (int ci = 0; ci < cin; ++ci) {
                const std::size_t wi = ((ky * g.kernel_w + kx) * cin + ci) * cout + co;
                grad_w[wi] += in.at(b, iy, ix, ci) * go;
                if (grad_in != nullptr) grad_in->at(b, iy, ix, ci) += weights[wi] * go;
              }
            }
        }
}

void depthwise_forward(const Tensor& in, std::span<const float> weights, std::span<const float> bias,
                       const ConvGeometry& g, Tensor& out) {
  const int c = in.c();
  out = Tensor({in.n(), g.out_h, g.out_w, c});
  for (int b = 0; b < in.n(); ++b)
    for (int ch = 0; ch < c; ++ch)
      for (int oy = 0; oy < g.out_h; ++oy)
        for (int ox = 0; ox < g.out_w; ++ox) {
          double acc = bias.empty() ? 0.0 : bias[ch];
          for (int ky = 0; ky < g.kernel_h; ++ky)
            for (int kx = 0; kx < g.kernel_w; ++kx) {
              const int iy = oy * g.stride - g.pad_top + ky;
              const int ix = ox * g.stride - g.pad_left + kx;
              if (!inside(iy, g.in_h) || !inside(ix, g.in_w)) continue;
              acc += static_cast<double>(in.at(b, iy, ix, ch)) * weights[(ky * g.kernel_w + kx) * c + ch];
            }
          out.at(b, oy, ox, ch) = static_cast<float>(acc);
        }
}

void depthwise_backward(const Tensor& in, std::span<const float> weights, const ConvGeometry& g,
                        const Tensor& grad_out, Tensor* grad_in, std::span<float> grad_w,
                        std::span<float> grad_b) {
  const int c = in.c();
  std::fill(grad_w.begin(), grad_w.end(), 0.0f);
  std::fill(grad_b.begin(), grad_b.end(), 0.0f);
  if (grad_in != nullptr) *grad_in = Tensor(in.shape());
  for (int b = 0; b < in.n(); ++b)
    for (int oy = 0; oy < g.out_h; ++oy)
      for (int ox = 0; ox < g.out_w; ++ox)
        for (int ch = 0; ch < c; ++ch) {
          const float go = grad_out.at(b, oy, ox, ch);
          if (!grad_b.empty()) grad_b[ch] += go;
          for (int ky = 0; ky < g.kernel_h; ++ky)
            for (int kx = 0; kx < g.kernel_w; ++kx) {
              const int iy = oy * g.stride - g.pad_top + ky;
              const int ix = ox * g.stride - g.pad_left + kx;
              if (!inside(iy, g.in_h) || !inside(ix, g.in_w)) continue;
              const std::size_t wi = (ky * g.kernel_w + kx) * c + ch;
              grad_w[wi] += in.at(b, iy, ix, ch) * go;
              if (grad_in != nullptr) grad_in->at(b, iy, ix, ch) += weights[wi] * go;
            }
        }
}

void max_pool_forward(const Tensor& in, const ConvGeometry& g, Tensor& out) {
  out = Tensor({in.n(), g.out_h, g.out_w, in.c()});
  for (int b = 0; b < in.n(); ++b)
    for (int ch = 0; ch < in.c(); ++ch)
      for (int oy = 0; oy < g.out_h; ++oy)
        for (int ox = 0; ox < g.out_w; ++ox) {
          float best = -std::numeric_limits<float>::infinity();
          for (int ky = 0; ky < g.kernel_h; ++ky)
            for (int kx = 0; kx < g.kernel_w; ++kx) {
              const int iy = oy * g.stride - g.pad_top + ky;
              const int ix = ox * g.stride - g.pad_left + kx;
              if (inside(iy, g.in_h) && inside(ix, g.in_w)) best = std::max(best, in.at(b, iy, ix, ch));
            }
          out.at(b, oy, ox, ch) = best;
        }
}

void max_pool_backward(const Tensor& in, const ConvGeometry& g, const Tensor& grad_out, Tensor& grad_in) {
  grad_in = Tensor(in.shape());
  for (int b = 0; b < in.n(); ++b)
    for (int ch = 0; ch < in.c(); ++ch)
      for (int oy = 0; oy < g.out_h; ++oy)
        for (int ox = 0; ox < g.out_w; ++ox) {
          float best = -std::numeric_limits<float>::infinity();
          int by = -1;
          int bx = -1;
          for (int ky = 0; ky < g.kernel_h; ++ky)
            for (int kx = 0; kx < g.kernel_w; ++kx) {
              const int iy = oy * g.stride - g.pad_top + ky;
              const int ix = ox * g.stride - g.pad_left + kx;
              if (inside(iy, g.in_h) && inside(ix, g.in_w) && in.at(b, iy, ix, ch) > best) {
                best = in.at(b, iy, ix, ch);
                by = iy;
                bx = ix;
              }
            }
          if (by >= 0) grad_in.at(b, by, bx, ch) += grad_out.at(b, oy, ox, ch);
        }
}

void global_avg_pool_forward(const Tensor& in, Tensor& out) {
  out = Tensor({in.n(), 1, 1, in.c()});
  for (int b = 0; b < in.n(); ++b)
    for (int ch = 0; ch < in.c(); ++ch) {
      double acc = 0.0;
      for (int y = 0; y < in.h(); ++y)
        for (int x = 0; x < in.w(); ++x) acc += in.at(b, y, x, ch);
      out.at(b, 0, 0, ch) = static_cast<float>(acc / (in.h() * in.w()));
    }
}

void global_avg_pool_backward(const Tensor& grad_out, Tensor& grad_in) {
  const double area = static_cast<double>(grad_in.h()) * grad_in.w();
  for (int b = 0; b < grad_in.n(); ++b)
    for (int y = 0; y < grad_in.h(); ++y)
      for (int x = 0; x < grad_in.w(); ++x)
        for (int ch = 0; ch < grad_in.c(); ++ch)
          grad_in.at(b, y, x, ch) = static_cast<float>(grad_out.at(b, 0, 0, ch) / area);
}

void dense_forward(const Tensor& x, std::span<const float> weights, std::span<const float> bias, int k,
                   Tensor& out) {
  const int d = static_cast<int>(x.item_size());
  out = Tensor({x.n(), 1, 1, k});
  for (int i = 0; i < x.n(); ++i)
    for (int o = 0; o < k; ++o) {
      double acc = bias.empty() ? 0.0 : bias[o];
      for (int j = 0; j < d; ++j) acc += static_cast<double>(x.item(i)[j]) * weights[j * k + o];
      out.at(i, 0, 0, o) = static_cast<float>(acc);
    }
}

void dense_backward(const Tensor& x, std::span<const float> weights, const Tensor& grad_out,
                    Tensor* grad_x, std::span<float> grad_w, std::span<float> grad_b) {
  const int d = static_cast<int>(x.item_size());
  const int k = grad_out.c();
  std::fill(grad_w.begin(), grad_w.end(), 0.0f);
  std::fill(grad_b.begin(), grad_b.end(), 0.0f);
  if (grad_x != nullptr) *grad_x = Tensor(x.shape());
  for (int i = 0; i < x.n(); ++i)
    for (int o = 0; o < k; ++o) {
      const float go = grad_out.at(i, 0, 0, o);
      if (!grad_b.empty()) grad_b[o] += go;
      for (int j = 0; j < d; ++j) {
        grad_w[j * k + o] += x.item(i)[j] * go;
        if (grad_x != nullptr) grad_x->item(i)[j] += weights[j * k + o] * go;
      }
    }
}

void resize_bilinear(const ImageBuffer& src, int out_h, int out_w, std::span<float> out) {
  const double sy = static_cast<double>(src.height) / out_h;
  const double sx = static_cast<double>(src.width) / out_w;
  for (int y = 0; y < out_h; ++y)
    for (int x = 0; x < out_w; ++x) {
      const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, src.height - 1.0);
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, src.width - 1.0);
      const int y0 = static_cast<int>(fy);
      const int x0 = static_cast<int>(fx);
      const int y1 = std::min(y0 + 1, src.height - 1);
      const int x1 = std::min(x0 + 1, src.width - 1);
      const double ty = fy - y0;
      const double tx = fx - x0;
      for (int ch = 0; ch < 3; ++ch) {
        const double v = (1 - ty) * ((1 - tx) * src.at(y0, x0, ch) + tx * src.at(y0, x1, ch)) +
                         ty * ((1 - tx) * src.at(y1, x0, ch) + tx * src.at(y1, x1, ch));
        out[(static_cast<std::size_t>(y) * out_w + x) * 3 + ch] = static_cast<float>(v);
      }
    }
}

void confusion_tally(std::span<const int> predicted, std::span<const int> actual, int k,
                     std::span<std::int64_t> counts) {
  std::fill(counts.begin(), counts.end(), 0);
  for (std::size_t i = 0; i < predicted.size(); ++i) ++counts[static_cast<std::size_t>(predicted[i]) * k + actual[i]];
}

}  // namespace skinbench::kernels::serial
