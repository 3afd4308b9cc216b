#pragma once

// Fixtures and independent oracles shared by the unit and acceptance tests.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include "skinbench/dataset.hpp"
#include "skinbench/image_io.hpp"
#include "skinbench/tensor.hpp"

namespace testsupport {

namespace fs = std::filesystem;

class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("skinbench-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

struct ColorClass {
  const char* name;
  std::array<int, 3> rgb;
};

// Sorted by name, so the position is also the label index.
inline const std::vector<ColorClass>& color_classes() {
  static const std::vector<ColorClass> classes = {
      {"blue", {30, 40, 210}},   {"cyan", {40, 200, 210}},    {"gray", {128, 128, 128}},
      {"green", {40, 190, 50}},  {"magenta", {200, 40, 190}}, {"red", {215, 35, 35}},
      {"yellow", {220, 210, 40}},
  };
  return classes;
}

inline skinbench::ImageBuffer noisy_solid(int h, int w, const std::array<int, 3>& rgb, double sigma,
                                          std::mt19937& gen) {
  std::normal_distribution<double> noise(0.0, sigma);
  skinbench::ImageBuffer img(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        const double v = rgb[c] + (sigma > 0 ? noise(gen) : 0.0);
        img.at(y, x, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
  return img;
}

// 7 solid-colour classes of JPEGs with per-pixel gaussian noise.
inline void make_color_dataset(const fs::path& root, int per_class, int size = 40, double sigma = 8.0,
                               unsigned seed = 7) {
  std::mt19937 gen(seed);
  for (const auto& cls : color_classes()) {
    const fs::path dir = root / cls.name;
    fs::create_directories(dir);
    for (int i = 0; i < per_class; ++i) {
      char name[32];
      std::snprintf(name, sizeof(name), "img_%03d.jpg", i);
      skinbench::write_jpeg(dir / name, noisy_solid(size, size + 8, cls.rgb, sigma, gen));
    }
  }
}

inline void write_bytes(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out << bytes;
}

// Mean RGB of a decoded file, scaled to [0, 1].
inline std::array<double, 3> mean_color(const fs::path& path) {
  const auto img = skinbench::load_image(path);
  std::array<double, 3> sum{0, 0, 0};
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) sum[c] += img.at(y, x, c);
  const double n = static_cast<double>(img.height) * img.width * 255.0;
  return {sum[0] / n, sum[1] / n, sum[2] / n};
}

// Multinomial logistic regression on mean colour, full-batch gradient descent in double.
class MeanColorLogistic {
 public:
  void fit(const std::vector<skinbench::ImageSample>& samples, int k, int iterations = 3000, double lr = 2.0) {
    k_ = k;
    w_.assign(static_cast<std::size_t>(k) * 4, 0.0);
    std::vector<std::array<double, 4>> x;
    std::vector<int> y;
    for (const auto& s : samples) {
      const auto m = mean_color(s.path);
      x.push_back({m[0], m[1], m[2], 1.0});
      y.push_back(s.class_index);
    }
    std::vector<double> grad(w_.size());
    for (int it = 0; it < iterations; ++it) {
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t i = 0; i < x.size(); ++i) {
        const auto p = probs(x[i]);
        for (int c = 0; c < k; ++c) {
          const double d = p[c] - (c == y[i] ? 1.0 : 0.0);
          for (int f = 0; f < 4; ++f) grad[c * 4 + f] += d * x[i][f];
        }
      }
      for (std::size_t j = 0; j < w_.size(); ++j) w_[j] -= lr * grad[j] / static_cast<double>(x.size());
    }
  }

  int predict(const fs::path& path) const {
    const auto m = mean_color(path);
    const auto p = probs({m[0], m[1], m[2], 1.0});
    return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
  }

  double accuracy(const std::vector<skinbench::ImageSample>& samples) const {
    if (samples.empty()) return 0.0;
    int hits = 0;
    for (const auto& s : samples) hits += predict(s.path) == s.class_index;
    return static_cast<double>(hits) / static_cast<double>(samples.size());
  }

 private:
  std::vector<double> probs(const std::array<double, 4>& x) const {
    std::vector<double> z(k_);
    for (int c = 0; c < k_; ++c)
      for (int f = 0; f < 4; ++f) z[c] += w_[c * 4 + f] * x[f];
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0;
    for (auto& v : z) sum += (v = std::exp(v - mx));
    for (auto& v : z) v /= sum;
    return z;
  }

  int k_ = 0;
  std::vector<double> w_;
};

// Pairwise brute-force tally, rows = predicted.
inline std::vector<std::int64_t> brute_force_tally(const std::vector<int>& pred, const std::vector<int>& actual,
                                                   int k) {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(k) * k, 0);
  for (int p = 0; p < k; ++p)
    for (int a = 0; a < k; ++a) {
      std::int64_t n = 0;
      for (std::size_t i = 0; i < pred.size(); ++i) n += (pred[i] == p && actual[i] == a);
      counts[static_cast<std::size_t>(p) * k + a] = n;
    }
  return counts;
}

inline fs::path cli_path() { return SKINBENCH_CLI_PATH; }

}  // namespace testsupport
