// Serial reference kernels against their OpenMP counterparts.
// Set OMP_NUM_THREADS to vary the parallel width.

#include <benchmark/benchmark.h>

#include <random>

#include "skinbench/kernels.hpp"

using namespace skinbench;

namespace {

Tensor random_tensor(Shape4 s, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<float> d(-1.0f, 1.0f);
  Tensor t(s);
  for (auto& v : t.values()) v = d(gen);
  return t;
}

std::vector<float> random_vec(std::size_t n, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<float> d(-1.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = d(gen);
  return v;
}

struct ConvSetup {
  Tensor in = random_tensor({4, 56, 56, 32}, 1);
  std::vector<float> w = random_vec(3 * 3 * 32 * 64, 2);
  std::vector<float> b = random_vec(64, 3);
  ConvGeometry g = conv_geometry(56, 56, 3, 3, 1, Padding::Same);
};

template <bool Parallel>
void BM_Conv2dForward(benchmark::State& state) {
  ConvSetup s;
  Tensor out;
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::conv2d_forward(s.in, s.w, s.b, s.g, 64, out);
    else
      kernels::serial::conv2d_forward(s.in, s.w, s.b, s.g, 64, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void BM_Conv2dBackward(benchmark::State& state) {
  ConvSetup s;
  const Tensor go = random_tensor({4, 56, 56, 64}, 4);
  Tensor gi;
  std::vector<float> gw(s.w.size()), gb(64);
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::conv2d_backward(s.in, s.w, s.g, go, &gi, gw, gb);
    else
      kernels::serial::conv2d_backward(s.in, s.w, s.g, go, &gi, gw, gb);
    benchmark::DoNotOptimize(gw.data());
  }
}

template <bool Parallel>
void BM_Depthwise(benchmark::State& state) {
  const Tensor in = random_tensor({4, 112, 112, 32}, 5);
  const auto w = random_vec(3 * 3 * 32, 6);
  const auto b = random_vec(32, 7);
  const auto g = conv_geometry(112, 112, 3, 3, 2, Padding::Same);
  Tensor out;
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::depthwise_forward(in, w, b, g, out);
    else
      kernels::serial::depthwise_forward(in, w, b, g, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void BM_Dense(benchmark::State& state) {
  const Tensor x = random_tensor({256, 1, 1, 1024}, 8);
  const auto w = random_vec(1024 * 7, 9);
  const auto b = random_vec(7, 10);
  Tensor out;
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::dense_forward(x, w, b, 7, out);
    else
      kernels::serial::dense_forward(x, w, b, 7, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void BM_Resize(benchmark::State& state) {
  ImageBuffer img(450, 600);
  std::mt19937 gen(11);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(gen());
  std::vector<float> out(299 * 299 * 3);
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::resize_bilinear(img, 299, 299, out);
    else
      kernels::serial::resize_bilinear(img, 299, 299, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void BM_Confusion(benchmark::State& state) {
  std::mt19937 gen(12);
  std::vector<int> p(1 << 20), a(1 << 20);
  for (auto& v : p) v = static_cast<int>(gen() % 7);
  for (auto& v : a) v = static_cast<int>(gen() % 7);
  std::vector<std::int64_t> counts(49);
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::confusion_tally(p, a, 7, counts);
    else
      kernels::serial::confusion_tally(p, a, 7, counts);
    benchmark::DoNotOptimize(counts.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(p.size()));
}

}  // namespace

BENCHMARK(BM_Conv2dForward<false>)->Name("conv2d_forward/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Conv2dForward<true>)->Name("conv2d_forward/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Conv2dBackward<false>)->Name("conv2d_backward/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Conv2dBackward<true>)->Name("conv2d_backward/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Depthwise<false>)->Name("depthwise_forward/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Depthwise<true>)->Name("depthwise_forward/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Dense<false>)->Name("dense_forward/serial")->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Dense<true>)->Name("dense_forward/parallel")->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Resize<false>)->Name("resize_bilinear/serial")->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Resize<true>)->Name("resize_bilinear/parallel")->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Confusion<false>)->Name("confusion_tally/serial")->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Confusion<true>)->Name("confusion_tally/parallel")->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
