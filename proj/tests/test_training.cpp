#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "skinbench/error.hpp"
#include "skinbench/training.hpp"
#include "support.hpp"

using namespace skinbench;
using testsupport::TempDir;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no skinbench::Error thrown";
  return ErrorKind::EmptyInput;
}

ClassifierModel random_model(int k, bool freeze, std::uint64_t seed, const char* id = "MobileNet") {
  BuildOptions o;
  o.random_init = true;
  o.seed = seed;
  return build_classifier(id, k, freeze, o);
}

// Per-class constant colour images with mild noise, directly as tensors.
Batch colour_batch(int per_class, int k, const InputSpec& spec, unsigned seed) {
  std::mt19937 gen(seed);
  std::normal_distribution<float> noise(0.0f, 0.03f);
  Batch b;
  b.images = Tensor({per_class * k, spec.height, spec.width, 3});
  int i = 0;
  for (int c = 0; c < k; ++c) {
    const auto& rgb = testsupport::color_classes()[c].rgb;
    for (int j = 0; j < per_class; ++j, ++i) {
      auto item = b.images.item(i);
      for (std::size_t p = 0; p < item.size(); ++p) item[p] = std::clamp(rgb[p % 3] / 255.0f + noise(gen), 0.0f, 1.0f);
      b.labels.push_back(c);
    }
  }
  return b;
}

struct HeadOracle {
  int d, k;
  std::vector<double> w, b;
  double loss(const std::vector<std::vector<double>>& x, const std::vector<int>& y) const {
    double total = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      std::vector<double> z(k);
      for (int c = 0; c < k; ++c) {
        z[c] = b[c];
        for (int f = 0; f < d; ++f) z[c] += x[i][f] * w[f * k + c];
      }
      const double mx = *std::max_element(z.begin(), z.end());
      double s = 0;
      for (double v : z) s += std::exp(v - mx);
      total += -(z[y[i]] - mx - std::log(s));
    }
    return total / static_cast<double>(x.size());
  }
};

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8}); }

}  // namespace

TEST(CrossEntropy, Examples) {
  const std::vector<double> onehot = {0, 0, 1, 0};
  EXPECT_NEAR(cross_entropy(onehot, 2), 0.0, 1e-11);
  const std::vector<double> uniform(7, 1.0 / 7.0);
  for (int t = 0; t < 7; ++t) EXPECT_NEAR(cross_entropy(uniform, t), std::log(7.0), 1e-12);
  const std::vector<double> zero = {0.0, 1.0};
  EXPECT_NEAR(cross_entropy(zero, 0), -std::log(1e-12), 1e-9);
  EXPECT_NEAR(cross_entropy(zero, 0), 27.631, 1e-3);
  EXPECT_EQ(kind_of([&] { cross_entropy(zero, 2); }), ErrorKind::IndexOutOfRange);
}

TEST(Argmax, LowestIndexWinsTies) {
  EXPECT_EQ(argmax(std::vector<double>{0.3, 0.3, 0.4}), 2);
  EXPECT_EQ(argmax(std::vector<double>{0.5, 0.5}), 0);
}

TEST(HeadGradients, MatchCentralFiniteDifferences) {
  const int d = 8, k = 3, n = 5;
  std::mt19937 gen(21);
  std::normal_distribution<double> nd(0.0, 0.7);
  for (int trial = 0; trial < 5; ++trial) {
    DenseHead head{d, k, std::vector<float>(d * k), std::vector<float>(k)};
    for (auto& v : head.weights) v = static_cast<float>(nd(gen));
    for (auto& v : head.bias) v = static_cast<float>(nd(gen));
    Tensor feats({n, 1, 1, d});
    for (auto& v : feats.values()) v = static_cast<float>(nd(gen));
    std::vector<int> labels = {0, 2, 1, 1, 0};

    const auto g = head_gradients(head, feats, labels, true);

    HeadOracle o{d, k, {head.weights.begin(), head.weights.end()}, {head.bias.begin(), head.bias.end()}};
    std::vector<std::vector<double>> x(n, std::vector<double>(d));
    for (int i = 0; i < n; ++i)
      for (int f = 0; f < d; ++f) x[i][f] = feats.item(i)[f];
    EXPECT_NEAR(g.loss, o.loss(x, labels), 1e-6);

    const double h = 1e-5;
    for (std::size_t j = 0; j < o.w.size(); ++j) {
      const double keep = o.w[j];
      o.w[j] = keep + h;
      const double up = o.loss(x, labels);
      o.w[j] = keep - h;
      const double down = o.loss(x, labels);
      o.w[j] = keep;
      EXPECT_LT(rel_err(g.weights[j], (up - down) / (2 * h)), 1e-4) << "w" << j;
    }
    for (int c = 0; c < k; ++c) {
      const double keep = o.b[c];
      o.b[c] = keep + h;
      const double up = o.loss(x, labels);
      o.b[c] = keep - h;
      const double down = o.loss(x, labels);
      o.b[c] = keep;
      EXPECT_LT(rel_err(g.bias[c], (up - down) / (2 * h)), 1e-4) << "b" << c;
    }
    for (int i = 0; i < n; ++i)
      for (int f = 0; f < d; ++f) {
        const double keep = x[i][f];
        x[i][f] = keep + h;
        const double up = o.loss(x, labels);
        x[i][f] = keep - h;
        const double down = o.loss(x, labels);
        x[i][f] = keep;
        EXPECT_LT(rel_err(g.features.item(i)[f], (up - down) / (2 * h)), 1e-4);
      }
  }
}

TEST(Adam, FirstStepMatchesClosedForm) {
  Adam adam(0.01);
  const auto slot = adam.add_slot(3);
  std::vector<float> params = {1.0f, -2.0f, 0.5f};
  const std::vector<float> grads = {0.2f, -0.05f, 0.0f};
  adam.begin_step();
  adam.update(slot, params, grads);
  const double lr_t = 0.01 * std::sqrt(1 - 0.999) / (1 - 0.9);
  const std::vector<double> start = {1.0, -2.0, 0.5};
  for (int i = 0; i < 3; ++i) {
    const double m = 0.1 * grads[i];
    const double v = 0.001 * grads[i] * grads[i];
    EXPECT_NEAR(params[i], start[i] - lr_t * m / (std::sqrt(v) + 1e-7), 1e-6);
  }
}

TEST(Config, Validation) {
  TrainConfig c;
  c.epochs = 0;
  EXPECT_EQ(kind_of([&] { validate(c); }), ErrorKind::BadConfig);
  c = {};
  c.batch_size = 0;
  EXPECT_EQ(kind_of([&] { validate(c); }), ErrorKind::BadConfig);
  c = {};
  c.learning_rate = -1;
  EXPECT_EQ(kind_of([&] { validate(c); }), ErrorKind::BadConfig);
  c = {};
  c.learning_rate = 3e-3;
  c.seed = 12;
  const auto back = train_config_from_json(to_json(c));
  EXPECT_EQ(back.learning_rate, c.learning_rate);
  EXPECT_EQ(back.seed, 12u);
}

TEST(Training, ErrorsOnBadInputs) {
  TempDir dir;
  auto model = random_model(7, true, 1);
  const auto train_set = colour_batch(2, 7, model.backbone.input, 1);
  auto val = colour_batch(1, 7, model.backbone.input, 2);
  val.labels[3] = 9;
  TrainConfig cfg;
  cfg.epochs = 1;
  EXPECT_EQ(kind_of([&] { train_on_batches(model, train_set, val, cfg, dir / "m.sbm"); }),
            ErrorKind::LabelOutOfRange);
  cfg.epochs = 0;
  EXPECT_EQ(kind_of([&] { train_on_batches(model, train_set, train_set, cfg, dir / "m.sbm"); }),
            ErrorKind::BadConfig);
  cfg.epochs = 1;
  EXPECT_EQ(kind_of([&] { train_on_batches(model, train_set, Batch{}, cfg, dir / "m.sbm"); }),
            ErrorKind::EmptySplit);
}

TEST(Training, NonFiniteLossIsTrainingError) {
  TempDir dir;
  auto model = random_model(3, true, 1);
  model.head.weights[0] = std::numeric_limits<float>::quiet_NaN();
  const auto b = colour_batch(2, 3, model.backbone.input, 1);
  TrainConfig cfg;
  cfg.epochs = 2;
  try {
    train_on_batches(model, b, b, cfg, dir / "m.sbm");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TrainingError);
    ASSERT_TRUE(e.epoch().has_value());
    EXPECT_EQ(*e.epoch(), 1);
  }
}

TEST(Training, FrozenBackboneUnchangedUnfrozenChanges) {
  TempDir dir;
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 4;
  cfg.learning_rate = 1e-2;
  cfg.seed = 3;

  auto frozen = random_model(3, true, 3);
  const auto before = frozen.extractor.checksum();
  const auto head_before = frozen.head.checksum();
  const auto b = colour_batch(4, 3, frozen.backbone.input, 4);
  const auto r = train_on_batches(frozen, b, b, cfg, dir / "f.sbm");
  EXPECT_EQ(r.model.extractor.checksum(), before);
  EXPECT_NE(r.model.head.checksum(), head_before);

  auto open = random_model(3, false, 3);
  const auto r2 = train_on_batches(open, b, b, cfg, dir / "u.sbm");
  EXPECT_NE(r2.model.extractor.checksum(), before);
  EXPECT_FALSE(load_model(dir / "u.sbm").frozen);
}

TEST(Training, DeterministicForFixedSeed) {
  TempDir dir;
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.batch_size = 5;
  cfg.learning_rate = 5e-3;
  cfg.seed = 77;
  const auto m = random_model(4, true, 77);
  const auto b = colour_batch(5, 4, m.backbone.input, 5);
  const auto v = colour_batch(2, 4, m.backbone.input, 6);
  std::ostringstream log1, log2;
  const auto r1 = train_on_batches(m, b, v, cfg, dir / "a.sbm", &log1);
  const auto r2 = train_on_batches(m, b, v, cfg, dir / "b.sbm", &log2);
  EXPECT_EQ(r1.history, r2.history);
  EXPECT_EQ(log1.str(), log2.str());
  EXPECT_EQ(r1.model.head.checksum(), r2.model.head.checksum());
}

TEST(Training, CheckpointIsBestValidationEpoch) {
  TempDir dir;
  TrainConfig cfg;
  cfg.epochs = 6;
  cfg.batch_size = 4;
  cfg.learning_rate = 2e-2;
  cfg.seed = 5;
  const auto m = random_model(7, true, 5);
  const auto b = colour_batch(3, 7, m.backbone.input, 7);
  const auto v = colour_batch(2, 7, m.backbone.input, 8);
  const auto r = train_on_batches(m, b, v, cfg, dir / "m.sbm");
  ASSERT_EQ(r.history.records.size(), 6u);
  double best = -1;
  int best_index = -1;
  for (std::size_t i = 0; i < r.history.records.size(); ++i) {
    EXPECT_EQ(r.history.records[i].epoch, static_cast<int>(i) + 1);
    if (r.history.records[i].val_accuracy > best) {
      best = r.history.records[i].val_accuracy;
      best_index = static_cast<int>(i);
    }
  }
  EXPECT_EQ(r.history.best_epoch, best_index);

  // The saved artifact reproduces the best epoch's validation accuracy.
  const auto loaded = load_model(dir / "m.sbm");
  const auto probs = predict_proba(loaded, v.images);
  int hits = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) hits += argmax(probs[i]) == v.labels[i];
  EXPECT_DOUBLE_EQ(static_cast<double>(hits) / static_cast<double>(v.labels.size()), best);
  EXPECT_EQ(loaded.training_config.at("best_epoch").get<int>(), best_index);
}

TEST(Training, LossDecreasesAcrossSeeds) {
  TempDir dir;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.batch_size = 4;
    cfg.learning_rate = 1e-2;
    cfg.seed = seed;
    const auto m = random_model(3, true, seed);
    const auto b = colour_batch(6, 3, m.backbone.input, static_cast<unsigned>(seed));
    const auto r = train_on_batches(m, b, b, cfg, dir / "m.sbm");
    EXPECT_LT(r.history.records.back().train_loss, r.history.records.front().train_loss) << "seed " << seed;
  }
}
