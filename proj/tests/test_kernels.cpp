#include <gtest/gtest.h>

#include <random>

#include "skinbench/kernels.hpp"

using namespace skinbench;

namespace {

Tensor random_tensor(Shape4 s, std::mt19937& gen) {
  std::uniform_real_distribution<float> d(-1.0f, 1.0f);
  Tensor t(s);
  for (auto& v : t.values()) v = d(gen);
  return t;
}

std::vector<float> random_vec(std::size_t n, std::mt19937& gen) {
  std::uniform_real_distribution<float> d(-1.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = d(gen);
  return v;
}

void expect_close(std::span<const float> a, std::span<const float> b, float tol = 1e-4f) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_NEAR(a[i], b[i], tol * (1.0f + std::abs(b[i]))) << "at " << i;
}

struct ConvCase {
  int h, w, cin, cout, k, stride;
  Padding pad;
};

void PrintTo(const ConvCase& c, std::ostream* os) {
  *os << c.h << "x" << c.w << "_" << c.cin << "to" << c.cout << "_k" << c.k << "s" << c.stride;
}

}  // namespace

TEST(Geometry, SamePaddingFollowsCeilRule) {
  const auto g = conv_geometry(224, 224, 3, 3, 2, Padding::Same);
  EXPECT_EQ(g.out_h, 112);
  EXPECT_EQ(g.pad_top, 0);
  const auto v = conv_geometry(7, 7, 3, 3, 1, Padding::Valid);
  EXPECT_EQ(v.out_h, 5);
  const auto odd = conv_geometry(5, 5, 3, 3, 2, Padding::Same);
  EXPECT_EQ(odd.out_h, 3);
  EXPECT_EQ(odd.pad_top, 1);
}

class ConvKernels : public ::testing::TestWithParam<ConvCase> {};

TEST_P(ConvKernels, ParallelMatchesSerial) {
  const auto p = GetParam();
  std::mt19937 gen(11);
  const auto g = conv_geometry(p.h, p.w, p.k, p.k, p.stride, p.pad);
  const Tensor in = random_tensor({2, p.h, p.w, p.cin}, gen);
  const auto w = random_vec(static_cast<std::size_t>(p.k) * p.k * p.cin * p.cout, gen);
  const auto b = random_vec(p.cout, gen);

  Tensor out_p, out_s;
  kernels::conv2d_forward(in, w, b, g, p.cout, out_p);
  kernels::serial::conv2d_forward(in, w, b, g, p.cout, out_s);
  ASSERT_EQ(out_p.shape(), out_s.shape());
  expect_close(out_p.values(), out_s.values());

  const Tensor go = random_tensor(out_s.shape(), gen);
  Tensor gi_p, gi_s;
  std::vector<float> gw_p(w.size()), gw_s(w.size()), gb_p(b.size()), gb_s(b.size());
  kernels::conv2d_backward(in, w, g, go, &gi_p, gw_p, gb_p);
  kernels::serial::conv2d_backward(in, w, g, go, &gi_s, gw_s, gb_s);
  expect_close(gi_p.values(), gi_s.values());
  expect_close(gw_p, gw_s, 1e-3f);
  expect_close(gb_p, gb_s, 1e-3f);

  // Depthwise on the same geometry.
  const auto dw = random_vec(static_cast<std::size_t>(p.k) * p.k * p.cin, gen);
  const auto db = random_vec(p.cin, gen);
  kernels::depthwise_forward(in, dw, db, g, out_p);
  kernels::serial::depthwise_forward(in, dw, db, g, out_s);
  expect_close(out_p.values(), out_s.values());
  const Tensor dgo = random_tensor(out_s.shape(), gen);
  std::vector<float> dgw_p(dw.size()), dgw_s(dw.size()), dgb_p(db.size()), dgb_s(db.size());
  kernels::depthwise_backward(in, dw, g, dgo, &gi_p, dgw_p, dgb_p);
  kernels::serial::depthwise_backward(in, dw, g, dgo, &gi_s, dgw_s, dgb_s);
  expect_close(gi_p.values(), gi_s.values());
  expect_close(dgw_p, dgw_s, 1e-3f);
  expect_close(dgb_p, dgb_s, 1e-3f);
}

INSTANTIATE_TEST_SUITE_P(Shapes, ConvKernels,
                         ::testing::Values(ConvCase{9, 7, 3, 5, 3, 1, Padding::Same},
                                           ConvCase{9, 8, 4, 6, 3, 2, Padding::Same},
                                           ConvCase{6, 6, 5, 4, 1, 1, Padding::Valid},
                                           ConvCase{11, 10, 2, 3, 3, 2, Padding::Valid}),
                         [](const ::testing::TestParamInfo<ConvCase>& info) {
                           const auto& c = info.param;
                           return std::to_string(c.h) + "x" + std::to_string(c.w) + "_c" + std::to_string(c.cin) +
                                  "to" + std::to_string(c.cout) + "_k" + std::to_string(c.k) + "s" +
                                  std::to_string(c.stride) + (c.pad == Padding::Same ? "_same" : "_valid");
                         });

TEST(PoolKernels, MaxPoolParallelMatchesSerial) {
  std::mt19937 gen(3);
  const Tensor in = random_tensor({3, 9, 8, 4}, gen);
  const auto g = conv_geometry(9, 8, 2, 2, 2, Padding::Valid);
  Tensor a, b;
  kernels::max_pool_forward(in, g, a);
  kernels::serial::max_pool_forward(in, g, b);
  expect_close(a.values(), b.values(), 0.0f);
  const Tensor go = random_tensor(a.shape(), gen);
  Tensor ga, gb;
  kernels::max_pool_backward(in, g, go, ga);
  kernels::serial::max_pool_backward(in, g, go, gb);
  expect_close(ga.values(), gb.values(), 1e-6f);
}

TEST(PoolKernels, GlobalAveragePoolParallelMatchesSerial) {
  std::mt19937 gen(4);
  const Tensor in = random_tensor({3, 5, 6, 7}, gen);
  Tensor a, b;
  kernels::global_avg_pool_forward(in, a);
  kernels::serial::global_avg_pool_forward(in, b);
  ASSERT_EQ(a.shape(), (Shape4{3, 1, 1, 7}));
  expect_close(a.values(), b.values());
  Tensor ga(in.shape()), gb(in.shape());
  kernels::global_avg_pool_backward(a, ga);
  kernels::serial::global_avg_pool_backward(b, gb);
  expect_close(ga.values(), gb.values());
}

TEST(DenseKernels, ParallelMatchesSerial) {
  std::mt19937 gen(5);
  const Tensor x = random_tensor({6, 1, 1, 13}, gen);
  const auto w = random_vec(13 * 5, gen);
  const auto b = random_vec(5, gen);
  Tensor a, c;
  kernels::dense_forward(x, w, b, 5, a);
  kernels::serial::dense_forward(x, w, b, 5, c);
  expect_close(a.values(), c.values());
  const Tensor go = random_tensor(a.shape(), gen);
  Tensor gx_a, gx_c;
  std::vector<float> gw_a(w.size()), gw_c(w.size()), gb_a(5), gb_c(5);
  kernels::dense_backward(x, w, go, &gx_a, gw_a, gb_a);
  kernels::serial::dense_backward(x, w, go, &gx_c, gw_c, gb_c);
  expect_close(gx_a.values(), gx_c.values());
  expect_close(gw_a, gw_c);
  expect_close(gb_a, gb_c);
}

TEST(ResizeKernels, ParallelMatchesSerialAndKeepsConstants) {
  std::mt19937 gen(6);
  ImageBuffer img(37, 53);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(gen() & 0xff);
  std::vector<float> a(224 * 224 * 3), b(a.size());
  kernels::resize_bilinear(img, 224, 224, a);
  kernels::serial::resize_bilinear(img, 224, 224, b);
  expect_close(a, b, 1e-5f);

  ImageBuffer flat(450, 600);
  std::fill(flat.pixels.begin(), flat.pixels.end(), std::uint8_t{201});
  std::vector<float> c(299 * 299 * 3);
  kernels::resize_bilinear(flat, 299, 299, c);
  for (float v : c) ASSERT_EQ(v, 201.0f);
}

TEST(ConfusionKernels, ParallelMatchesSerial) {
  std::mt19937 gen(8);
  std::uniform_int_distribution<int> d(0, 6);
  std::vector<int> p(5000), a(5000);
  for (auto& v : p) v = d(gen);
  for (auto& v : a) v = d(gen);
  std::vector<std::int64_t> x(49), y(49);
  kernels::confusion_tally(p, a, 7, x);
  kernels::serial::confusion_tally(p, a, 7, y);
  EXPECT_EQ(x, y);
}
