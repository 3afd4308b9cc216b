#include "skinbench/training.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "skinbench/error.hpp"
#include "skinbench/kernels.hpp"
#include "skinbench/rng.hpp"

namespace skinbench {

void validate(const TrainConfig& config) {
  if (!(config.learning_rate > 0.0) || !std::isfinite(config.learning_rate)) {
    throw Error(ErrorKind::BadConfig, "learning_rate must be positive");
  }
  if (config.epochs < 1) throw Error(ErrorKind::BadConfig, "epochs must be >= 1");
  if (config.batch_size < 1) throw Error(ErrorKind::BadConfig, "batch_size must be >= 1");
}

nlohmann::json to_json(const TrainConfig& config) {
  return {{"learning_rate", config.learning_rate},
          {"epochs", config.epochs},
          {"batch_size", config.batch_size},
          {"seed", config.seed},
          {"optimizer",
           {{"name", "adam"}, {"beta_1", TrainConfig::kBeta1}, {"beta_2", TrainConfig::kBeta2},
            {"epsilon", TrainConfig::kEpsilon}}},
          {"loss", "categorical_crossentropy"}};
}

TrainConfig train_config_from_json(const nlohmann::json& doc) {
  TrainConfig config;
  config.learning_rate = doc.value("learning_rate", config.learning_rate);
  config.epochs = doc.value("epochs", config.epochs);
  config.batch_size = doc.value("batch_size", config.batch_size);
  config.seed = doc.value("seed", config.seed);
  return config;
}

nlohmann::json to_json(const EpochRecord& r) {
  return {{"epoch", r.epoch},
          {"train_loss", r.train_loss},
          {"train_accuracy", r.train_accuracy},
          {"val_loss", r.val_loss},
          {"val_accuracy", r.val_accuracy}};
}

nlohmann::json to_json(const TrainingHistory& history) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : history.records) records.push_back(to_json(r));
  return {{"records", records}, {"best_epoch", history.best_epoch}};
}

double cross_entropy(std::span<const double> pred, int true_index) {
  if (true_index < 0 || static_cast<std::size_t>(true_index) >= pred.size()) {
    throw Error(ErrorKind::IndexOutOfRange,
                "true index " + std::to_string(true_index) + " outside [0, " + std::to_string(pred.size()) + ")");
  }
  return -std::log(std::clamp(pred[true_index], 1e-12, 1.0));
}

int argmax(std::span<const double> values) {
  int best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = static_cast<int>(i);
  }
  return best;
}

HeadGradients head_gradients(const DenseHead& head, const Tensor& features, std::span<const int> labels,
                             bool want_feature_grad) {
  const int n = features.n();
  const Tensor logits = head_logits(head, features);
  Tensor grad_logits({n, 1, 1, head.out_dim});
  HeadGradients out;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto p = softmax(logits.item(i));
    total += cross_entropy(p, labels[i]);
    if (argmax(p) == labels[i]) ++out.correct;
    for (int k = 0; k < head.out_dim; ++k) {
      grad_logits.at(i, 0, 0, k) = static_cast<float>((p[k] - (k == labels[i] ? 1.0 : 0.0)) / n);
    }
  }
  out.loss = total / n;
  out.weights.resize(head.weights.size());
  out.bias.resize(head.bias.size());
  kernels::dense_backward(features, head.weights, grad_logits, want_feature_grad ? &out.features : nullptr,
                          out.weights, out.bias);
  return out;
}

std::size_t Adam::add_slot(std::size_t size) {
  m_.emplace_back(size, 0.0f);
  v_.emplace_back(size, 0.0f);
  return m_.size() - 1;
}

void Adam::update(std::size_t slot, std::span<float> params, std::span<const float> grads) {
  const double t = static_cast<double>(step_);
  const auto lr_t = static_cast<float>(learning_rate_ * std::sqrt(1.0 - std::pow(TrainConfig::kBeta2, t)) /
                                       (1.0 - std::pow(TrainConfig::kBeta1, t)));
  constexpr auto b1 = static_cast<float>(TrainConfig::kBeta1);
  constexpr auto b2 = static_cast<float>(TrainConfig::kBeta2);
  constexpr auto eps = static_cast<float>(TrainConfig::kEpsilon);
  auto& m = m_[slot];
  auto& v = v_[slot];
  const auto size = static_cast<std::int64_t>(params.size());
#pragma omp parallel for simd schedule(static)
  for (std::int64_t i = 0; i < size; ++i) {
    const float g = grads[i];
    m[i] = b1 * m[i] + (1.0f - b1) * g;
    v[i] = b2 * v[i] + (1.0f - b2) * g * g;
    params[i] -= lr_t * m[i] / (std::sqrt(v[i]) + eps);
  }
}

Trainer::Trainer(ClassifierModel& model, const TrainConfig& config) : model_(model), adam_(config.learning_rate) {
  head_slot_ = adam_.add_slot(model_.head.weights.size());
  adam_.add_slot(model_.head.bias.size());
  if (!model_.frozen) {
    for (const auto& layer : model_.extractor.layers()) {
      auto& slots = backbone_slots_.emplace_back();
      for (const auto& p : layer.params) slots.push_back(adam_.add_slot(p.size()));
    }
  }
}

void Trainer::apply_head(const HeadGradients& grads) {
  adam_.update(head_slot_, model_.head.weights, grads.weights);
  adam_.update(head_slot_ + 1, model_.head.bias, grads.bias);
}

HeadGradients Trainer::step_on_features(const Tensor& features, std::span<const int> labels) {
  if (!model_.frozen) throw Error(ErrorKind::BadConfig, "feature-level steps require a frozen backbone");
  HeadGradients grads = head_gradients(model_.head, features, labels);
  adam_.begin_step();
  apply_head(grads);
  return grads;
}

HeadGradients Trainer::step(const Tensor& images, std::span<const int> labels) {
  if (model_.frozen) return step_on_features(extract_features(model_, images), labels);

  Trace trace;
  const Tensor features = model_.extractor.forward(images, trace);
  HeadGradients grads = head_gradients(model_.head, features, labels, true);
  Gradients backbone = model_.extractor.zero_gradients();
  model_.extractor.backward(trace, grads.features, backbone);

  adam_.begin_step();
  apply_head(grads);
  auto& layers = model_.extractor.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    for (std::size_t p = 0; p < layers[i].params.size(); ++p) {
      adam_.update(backbone_slots_[i][p], layers[i].params[p], backbone[i][p]);
    }
  }
  return grads;
}

namespace {

Tensor gather(const Tensor& source, std::span<const std::size_t> rows) {
  Shape4 shape = source.shape();
  shape.n = static_cast<int>(rows.size());
  Tensor out(shape);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = source.item(static_cast<int>(rows[i]));
    std::copy(src.begin(), src.end(), out.item(static_cast<int>(i)).begin());
  }
  return out;
}

struct Metrics {
  double loss = 0.0;
  double accuracy = 0.0;
};

Metrics evaluate_features(const DenseHead& head, const Tensor& features, std::span<const int> labels) {
  const auto probs = softmax_rows(head_logits(head, features));
  double loss = 0.0;
  int correct = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    loss += cross_entropy(probs[i], labels[i]);
    if (argmax(probs[i]) == labels[i]) ++correct;
  }
  const auto n = static_cast<double>(probs.size());
  return {loss / n, correct / n};
}

void check_labels(std::span<const int> labels, int num_classes, const char* split) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) {
      Error e(ErrorKind::LabelOutOfRange, std::string(split) + " sample " + std::to_string(i) + " has label " +
                                              std::to_string(labels[i]) + " but the model has " +
                                              std::to_string(num_classes) + " classes");
      throw e.with_index(i);
    }
  }
}

}  // namespace

TrainResult train_on_batches(ClassifierModel model, const Batch& train_set, const Batch& val_set,
                             const TrainConfig& config, const std::filesystem::path& artifact_path,
                             std::ostream* log) {
  validate(config);
  if (train_set.labels.empty()) throw Error(ErrorKind::EmptySplit, "training split is empty");
  if (val_set.labels.empty()) throw Error(ErrorKind::EmptySplit, "validation split is empty");
  check_labels(train_set.labels, model.num_classes, "train");
  check_labels(val_set.labels, model.num_classes, "val");

  // A frozen extractor makes features constant, so they are computed once.
  Tensor train_features;
  Tensor val_features;
  if (model.frozen) {
    train_features = extract_features(model, train_set.images);
    val_features = extract_features(model, val_set.images);
  }

  Trainer trainer(model, config);
  Rng rng(config.seed);
  const std::size_t n = train_set.labels.size();
  TrainResult result;
  result.model = model;
  double best_accuracy = -1.0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto order = seeded_permutation(n, rng);
    double loss_sum = 0.0;
    int correct = 0;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop = std::min(n, start + static_cast<std::size_t>(config.batch_size));
      const std::span<const std::size_t> rows(order.data() + start, stop - start);
      std::vector<int> labels;
      for (std::size_t r : rows) labels.push_back(train_set.labels[r]);
      const HeadGradients g = model.frozen ? trainer.step_on_features(gather(train_features, rows), labels)
                                           : trainer.step(gather(train_set.images, rows), labels);
      if (!std::isfinite(g.loss)) {
        Error e(ErrorKind::TrainingError, "non-finite loss in epoch " + std::to_string(epoch));
        throw e.with_epoch(epoch);
      }
      loss_sum += g.loss * static_cast<double>(rows.size());
      correct += g.correct;
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / static_cast<double>(n);
    record.train_accuracy = static_cast<double>(correct) / static_cast<double>(n);
    const Metrics val =
        evaluate_features(model.head, model.frozen ? val_features : extract_features(model, val_set.images),
                          val_set.labels);
    record.val_loss = val.loss;
    record.val_accuracy = val.accuracy;
    if (!std::isfinite(record.val_loss)) {
      Error e(ErrorKind::TrainingError, "non-finite validation loss in epoch " + std::to_string(epoch));
      throw e.with_epoch(epoch);
    }
    result.history.records.push_back(record);

    if (record.val_accuracy > best_accuracy) {
      best_accuracy = record.val_accuracy;
      result.history.best_epoch = epoch - 1;
      result.model.head = model.head;
      if (!model.frozen) result.model.extractor = model.extractor;
    }
    if (log != nullptr) *log << to_json(record).dump() << '\n' << std::flush;
  }

  result.model.training_config = to_json(config);
  result.model.training_config["best_epoch"] = result.history.best_epoch;
  result.artifact = save_model(result.model, artifact_path);
  return result;
}

TrainResult train(ClassifierModel model, std::span<const ImageSample> train_split,
                  std::span<const ImageSample> val_split, const TrainConfig& config,
                  const std::filesystem::path& artifact_path, std::ostream* log) {
  validate(config);
  if (train_split.empty()) throw Error(ErrorKind::EmptySplit, "training split is empty");
  if (val_split.empty()) throw Error(ErrorKind::EmptySplit, "validation split is empty");
  auto labels_of = [](std::span<const ImageSample> split) {
    std::vector<int> labels;
    for (const auto& s : split) labels.push_back(s.class_index);
    return labels;
  };
  check_labels(labels_of(train_split), model.num_classes, "train");
  check_labels(labels_of(val_split), model.num_classes, "val");

  const Batch train_set = preprocess_batch(train_split, model.backbone.input);
  const Batch val_set = preprocess_batch(val_split, model.backbone.input);
  return train_on_batches(std::move(model), train_set, val_set, config, artifact_path, log);
}

}  // namespace skinbench
