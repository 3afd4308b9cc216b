#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "resize_coeffs.hpp"
#include "skinbench/kernels.hpp"

namespace skinbench::kernels {

void conv2d_forward(const Tensor& in, std::span<const float> weights, std::span<const float> bias,
                    const ConvGeometry& g, int out_channels, Tensor& out) {
  const int n = in.n();
  const int cin = in.c();
  const int cout = out_channels;
  out = Tensor({n, g.out_h, g.out_w, cout});
  const float* src = in.data();
  const float* w = weights.data();
  float* dst = out.data();

#pragma omp parallel for collapse(2) schedule(static)
  for (int b = 0; b < n; ++b) {
    for (int oy = 0; oy < g.out_h; ++oy) {
      for (int ox = 0; ox < g.out_w; ++ox) {
        float* acc = dst + ((static_cast<std::size_t>(b) * g.out_h + oy) * g.out_w + ox) * cout;
        if (bias.empty()) {
          std::fill(acc, acc + cout, 0.0f);
        } else {
          std::copy(bias.begin(), bias.end(), acc);
        }
        for (int ky = 0; ky < g.kernel_h; ++ky) {
          const int iy = oy * g.stride - g.pad_top + ky;
          if (iy < 0 || iy >= g.in_h) continue;
          for (int kx = 0; kx < g.kernel_w; ++kx) {
            const int ix = ox * g.stride - g.pad_left + kx;
            if (ix < 0 || ix >= g.in_w) continue;
            const float* pixel = src + ((static_cast<std::size_t>(b) * g.in_h + iy) * g.in_w + ix) * cin;
            const float* wrow = w + (static_cast<std::size_t>(ky) * g.kernel_w + kx) * cin * cout;
            for (int ci = 0; ci < cin; ++ci) {
              const float v = pixel[ci];
              const float* wc = wrow + static_cast<std::size_t>(ci) * cout;
#pragma omp simd
              for (int co = 0; co < cout; ++co) acc[co] += v * wc[co];
            }
          }
        }
      }
    }
  }
}

void conv2d_backward(const Tensor& in, std::span<const float> weights, const ConvGeometry& g,
                     const Tensor& grad_out, Tensor* grad_in, std::span<float> grad_w,
                     std::span<float> grad_b) {
  const int n = in.n();
  const int cin = in.c();
  const int cout = grad_out.c();
  const float* src = in.data();
  const float* gout = grad_out.data();
  const float* w = weights.data();

  if (!grad_b.empty()) {
#pragma omp parallel for schedule(static)
    for (int co = 0; co < cout; ++co) {
      float acc = 0.0f;
      for (std::size_t p = 0; p < static_cast<std::size_t>(n) * g.out_h * g.out_w; ++p) acc += gout[p * cout + co];
      grad_b[co] = acc;
    }
  }

  const int rows = g.kernel_h * g.kernel_w * cin;
#pragma omp parallel for schedule(static)
  for (int r = 0; r < rows; ++r) {
    const int ci = r % cin;
    const int kx = (r / cin) % g.kernel_w;
    const int ky = r / (cin * g.kernel_w);
    float* acc = grad_w.data() + static_cast<std::size_t>(r) * cout;
    std::fill(acc, acc + cout, 0.0f);
    for (int b = 0; b < n; ++b) {
      for (int oy = 0; oy < g.out_h; ++oy) {
        const int iy = oy * g.stride - g.pad_top + ky;
        if (iy < 0 || iy >= g.in_h) continue;
        for (int ox = 0; ox < g.out_w; ++ox) {
          const int ix = ox * g.stride - g.pad_left + kx;
          if (ix < 0 || ix >= g.in_w) continue;
          const float v = src[((static_cast<std::size_t>(b) * g.in_h + iy) * g.in_w + ix) * cin + ci];
          const float* go = gout + ((static_cast<std::size_t>(b) * g.out_h + oy) * g.out_w + ox) * cout;
#pragma omp simd
          for (int co = 0; co < cout; ++co) acc[co] += v * go[co];
        }
      }
    }
  }

  if (grad_in == nullptr) return;
  *grad_in = Tensor(in.shape());
  float* gin = grad_in->data();
#pragma omp parallel for collapse(2) schedule(static)
  for (int b = 0; b < n; ++b) {
    for (int iy = 0; iy < g.in_h; ++iy) {
      for (int ix = 0; ix < g.in_w; ++ix) {
        float* acc = gin + ((static_cast<std::size_t>(b) * g.in_h + iy) * g.in_w + ix) * cin;
        for (int ky = 0; ky < g.kernel_h; ++ky) {
          const int ty = iy + g.pad_top - ky;
          if (ty < 0 || ty % g.stride != 0) continue;
          const int oy = ty / g.stride;
          if (oy >= g.out_h) continue;
          for (int kx = 0; kx < g.kernel_w; ++kx) {
            const int tx = ix + g.pad_left - kx;
            if (tx < 0 || tx % g.stride != 0) continue;
            const int ox = tx / g.stride;
            if (ox >= g.out_w) continue;
            const float* go = gout + ((static_cast<std::size_t>(b) * g.out_h + oy) * g.out_w + ox) * cout;
            const float* wrow = w + (static_cast<std::size_t>(ky) * g.kernel_w + kx) * cin * cout;
            for (int ci = 0; ci < cin; ++ci) {
              const float* wc = wrow + static_cast<std::size_t>(ci) * cout;
              float s = 0.0f;
#pragma omp simd reduction(+ : s)
              for (int co = 0; co < cout; ++co) s += wc[co] * go[co];
              acc[ci] += s;
            }
          }
        }
      }
    }
  }
}

void depthwise_forward(const Tensor& in, std::span<const float> weights, std::span<const float> bias,
                       const ConvGeometry& g, Tensor& out) {
  const int n = in.n();
  const int c = in.c();
  out = Tensor({n, g.out_h, g.out_w, c});
  const float* src = in.data();
  const float* w = weights.data();
  float* dst = out.data();

#pragma omp parallel for collapse(2) schedule(static)
  for (int b = 0; b < n; ++b) {
    for (int oy = 0; oy < g.out_h; ++oy) {
      for (int ox = 0; ox < g.out_w; ++ox) {
        float* acc = dst + ((static_cast<std::size_t>(b) * g.out_h + oy) * g.out_w + ox) * c;
        if (bias.empty()) {
          std::fill(acc, acc + c, 0.0f);
        } else {
          std::copy(bias.begin(), bias.end(), acc);
        }
        for (int ky = 0; ky < g.kernel_h; ++ky) {
          const int iy = oy * g.stride - g.pad_top + ky;
          if (iy < 0 || iy >= g.in_h) continue;
          for (int kx = 0; kx < g.kernel_w; ++kx) {
            const int ix = ox * g.stride - g.pad_left + kx;
            if (ix < 0 || ix >= g.in_w) continue;
            const float* pixel = src + ((static_cast<std::size_t>(b) * g.in_h + iy) * g.in_w + ix) * c;
            const float* wk = w + (static_cast<std::size_t>(ky) * g.kernel_w + kx) * c;
#pragma omp simd
            for (int ch = 0; ch < c; ++ch) acc[ch] += pixel[ch] * wk[ch];
          }
        }
      }
    }
  }
}

void depthwise_backward(const Tensor& in, std::span<const float> weights, const ConvGeometry& g,
                        const Tensor& grad_out, Tensor* grad_in, std::span<float> grad_w,
                        std::span<float> grad_b) {
  const int n = in.n();
  const int c = in.c();
  const float* src = in.data();
  const float* gout = grad_out.data();
  const float* w = weights.data();

  if (!grad_b.empty()) {
#pragma omp parallel for schedule(static)
    for (int ch = 0; ch < c; ++ch) {
      float acc = 0.0f;
      for (std::size_t p = 0; p < static_cast<std::size_t>(n) * g.out_h * g.out_w; ++p) acc += gout[p * c + ch];
      grad_b[ch] = acc;
    }
  }

  const int taps = g.kernel_h * g.kernel_w;
#pragma omp parallel for schedule(static)
  for (int t = 0; t < taps; ++t) {
    const int ky = t / g.kernel_w;
    const int kx = t % g.kernel_w;
    float* acc = grad_w.data() + static_cast<std::size_t>(t) * c;
    std::fill(acc, acc + c, 0.0f);
    for (int b = 0; b < n; ++b) {
      for (int oy = 0; oy < g.out_h; ++oy) {
        const int iy = oy * g.stride - g.pad_top + ky;
        if (iy < 0 || iy >= g.in_h) continue;
        for (int ox = 0; ox < g.out_w; ++ox) {
          const int ix = ox * g.stride - g.pad_left + kx;
          if (ix < 0 || ix >= g.in_w) continue;
          const float* pixel = src + ((static_cast<std::size_t>(b) * g.in_h + iy) * g.in_w + ix) * c;
          const float* go = gout + ((static_cast<std::size_t>(b) * g.out_h + oy) * g.out_w + ox) * c;
#pragma omp simd
          for (int ch = 0; ch < c; ++ch) acc[ch] += pixel[ch] * go[ch];
        }
      }
    }
  }

  if (grad_in == nullptr) return;
  *grad_in = Tensor(in.shape());
  float* gin = grad_in->data();
#pragma omp parallel for collapse(2) schedule(static)
  for (int b = 0; b < n; ++b) {
    for (int iy = 0; iy < g.in_h; ++iy) {
      for (int ix = 0; ix < g.in_w; ++ix) {
        float* acc = gin + ((static_cast<std::size_t>(b) * g.in_h + iy) * g.in_w + ix) * c;
        for (int ky = 0; ky < g.kernel_h; ++ky) {
          const int ty = iy + g.pad_top - ky;
          if (ty < 0 || ty % g.stride != 0) continue;
          const int oy = ty / g.stride;
          if (oy >= g.out_h) continue;
          for (int kx = 0; kx < g.kernel_w; ++kx) {
            const int tx = ix + g.pad_left - kx;
            if (tx < 0 || tx % g.stride != 0) continue;
            const int ox = tx / g.stride;
            if (ox >= g.out_w) continue;
            const float* go = gout + ((static_cast<std::size_t>(b) * g.out_h + oy) * g.out_w + ox) * c;
            const float* wk = w + (static_cast<std::size_t>(ky) * g.kernel_w + kx) * c;
#pragma omp simd
            for (int ch = 0; ch < c; ++ch) acc[ch] += wk[ch] * go[ch];
          }
        }
      }
    }
  }
}

void max_pool_forward(const Tensor& in, const ConvGeometry& g, Tensor& out) {
  const int n = in.n();
  const int c = in.c();
  out = Tensor({n, g.out_h, g.out_w, c});
#pragma omp parallel for collapse(2) schedule(static)
  for (int b = 0; b < n; ++b) {
    for (int oy = 0; oy < g.out_h; ++oy) {
      for (int ox = 0; ox < g.out_w; ++ox) {
        for (int ch = 0; ch < c; ++ch) {
          float best = -std::numeric_limits<float>::infinity();
          for (int ky = 0; ky < g.kernel_h; ++ky) {
            const int iy = oy * g.stride - g.pad_top + ky;
            if (iy < 0 || iy >= g.in_h) continue;
            for (int kx = 0; kx < g.kernel_w; ++kx) {
              const int ix = ox * g.stride - g.pad_left + kx;
              if (ix < 0 || ix >= g.in_w) continue;
              best = std::max(best, in.at(b, iy, ix, ch));
            }
          }
          out.at(b, oy, ox, ch) = best;
        }
      }
    }
  }
}

void max_pool_backward(const Tensor& in, const ConvGeometry& g, const Tensor& grad_out, Tensor& grad_in) {
  const int n = in.n();
  const int c = in.c();
  grad_in = Tensor(in.shape());
  // Windows may overlap, so each thread owns whole images.
#pragma omp parallel for schedule(static)
  for (int b = 0; b < n; ++b) {
    for (int oy = 0; oy < g.out_h; ++oy) {
      for (int ox = 0; ox < g.out_w; ++ox) {
        for (int ch = 0; ch < c; ++ch) {
          float best = -std::numeric_limits<float>::infinity();
          int by = -1;
          int bx = -1;
          for (int ky = 0; ky < g.kernel_h; ++ky) {
            const int iy = oy * g.stride - g.pad_top + ky;
            if (iy < 0 || iy >= g.in_h) continue;
            for (int kx = 0; kx < g.kernel_w; ++kx) {
              const int ix = ox * g.stride - g.pad_left + kx;
              if (ix < 0 || ix >= g.in_w) continue;
              const float v = in.at(b, iy, ix, ch);
              if (v > best) {
                best = v;
                by = iy;
                bx = ix;
              }
            }
          }
          if (by >= 0) grad_in.at(b, by, bx, ch) += grad_out.at(b, oy, ox, ch);
        }
      }
    }
  }
}

void global_avg_pool_forward(const Tensor& in, Tensor& out) {
  const int n = in.n();
  const int c = in.c();
  const int area = in.h() * in.w();
  out = Tensor({n, 1, 1, c});
#pragma omp parallel for schedule(static)
  for (int b = 0; b < n; ++b) {
    std::vector<double> acc(c, 0.0);
    const float* src = in.item(b).data();
    for (int p = 0; p < area; ++p) {
      for (int ch = 0; ch < c; ++ch) acc[ch] += src[static_cast<std::size_t>(p) * c + ch];
    }
    for (int ch = 0; ch < c; ++ch) out.at(b, 0, 0, ch) = static_cast<float>(acc[ch] / area);
  }
}

void global_avg_pool_backward(const Tensor& grad_out, Tensor& grad_in) {
  const int n = grad_in.n();
  const int c = grad_in.c();
  const int area = grad_in.h() * grad_in.w();
  const float scale = 1.0f / static_cast<float>(area);
#pragma omp parallel for schedule(static)
  for (int b = 0; b < n; ++b) {
    float* dst = grad_in.item(b).data();
    for (int p = 0; p < area; ++p) {
      for (int ch = 0; ch < c; ++ch) dst[static_cast<std::size_t>(p) * c + ch] = grad_out.at(b, 0, 0, ch) * scale;
    }
  }
}

void dense_forward(const Tensor& x, std::span<const float> weights, std::span<const float> bias, int k,
                   Tensor& out) {
  const int n = x.n();
  const int d = static_cast<int>(x.item_size());
  out = Tensor({n, 1, 1, k});
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    float* acc = out.item(i).data();
    if (bias.empty()) {
      std::fill(acc, acc + k, 0.0f);
    } else {
      std::copy(bias.begin(), bias.end(), acc);
    }
    const float* row = x.item(i).data();
    for (int j = 0; j < d; ++j) {
      const float v = row[j];
      const float* wr = weights.data() + static_cast<std::size_t>(j) * k;
#pragma omp simd
      for (int o = 0; o < k; ++o) acc[o] += v * wr[o];
    }
  }
}

void dense_backward(const Tensor& x, std::span<const float> weights, const Tensor& grad_out,
                    Tensor* grad_x, std::span<float> grad_w, std::span<float> grad_b) {
  const int n = x.n();
  const int d = static_cast<int>(x.item_size());
  const int k = grad_out.c();

  if (!grad_b.empty()) {
    for (int o = 0; o < k; ++o) {
      float acc = 0.0f;
      for (int i = 0; i < n; ++i) acc += grad_out.at(i, 0, 0, o);
      grad_b[o] = acc;
    }
  }

#pragma omp parallel for schedule(static)
  for (int j = 0; j < d; ++j) {
    float* acc = grad_w.data() + static_cast<std::size_t>(j) * k;
    std::fill(acc, acc + k, 0.0f);
    for (int i = 0; i < n; ++i) {
      const float v = x.item(i)[j];
      const float* go = grad_out.item(i).data();
#pragma omp simd
      for (int o = 0; o < k; ++o) acc[o] += v * go[o];
    }
  }

  if (grad_x == nullptr) return;
  *grad_x = Tensor(x.shape());
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const float* go = grad_out.item(i).data();
    float* gx = grad_x->item(i).data();
    for (int j = 0; j < d; ++j) {
      const float* wr = weights.data() + static_cast<std::size_t>(j) * k;
      float s = 0.0f;
      for (int o = 0; o < k; ++o) s += wr[o] * go[o];
      gx[j] = s;
    }
  }
}

void resize_bilinear(const ImageBuffer& src, int out_h, int out_w, std::span<float> out) {
  const auto rows = detail::resize_axis(src.height, out_h);
  const auto cols = detail::resize_axis(src.width, out_w);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < out_h; ++y) {
    const auto& ry = rows[y];
    for (int x = 0; x < out_w; ++x) {
      const auto& rx = cols[x];
      for (int ch = 0; ch < 3; ++ch) {
        out[(static_cast<std::size_t>(y) * out_w + x) * 3 + ch] = detail::bilinear_sample(src, ry, rx, ch);
      }
    }
  }
}

void confusion_tally(std::span<const int> predicted, std::span<const int> actual, int k,
                     std::span<std::int64_t> counts) {
  std::fill(counts.begin(), counts.end(), 0);
  const auto n = static_cast<std::int64_t>(predicted.size());
#pragma omp parallel
  {
    std::vector<std::int64_t> shard(counts.size(), 0);
#pragma omp for schedule(static) nowait
    for (std::int64_t i = 0; i < n; ++i) {
      ++shard[static_cast<std::size_t>(predicted[i]) * k + actual[i]];
    }
#pragma omp critical
    for (std::size_t j = 0; j < counts.size(); ++j) counts[j] += shard[j];
  }
}

}  // namespace skinbench::kernels
