#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "json.hpp"
#include "skinbench/dataset.hpp"
#include "skinbench/model_zoo.hpp"
#include "skinbench/preprocess.hpp"

namespace skinbench {

struct TrainConfig {
  double learning_rate = 1e-4;
  int epochs = 20;
  int batch_size = 32;
  std::uint64_t seed = 0;

  // Fixed optimizer and loss; recorded for provenance only.
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-7;
};

/// Throws BadConfig.
void validate(const TrainConfig& config);
nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& doc);

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

nlohmann::json to_json(const EpochRecord& record);

struct TrainingHistory {
  std::vector<EpochRecord> records;
  int best_epoch = 0;  // index into records; highest val_accuracy, earliest on ties

  friend bool operator==(const TrainingHistory&, const TrainingHistory&) = default;
};

nlohmann::json to_json(const TrainingHistory& history);

/// -log(pred[true_index]) with pred clipped to [1e-12, 1]. Throws IndexOutOfRange.
double cross_entropy(std::span<const double> pred, int true_index);

/// Index of the largest entry; ties go to the lowest index.
int argmax(std::span<const double> values);

struct HeadGradients {
  double loss = 0.0;  // mean cross-entropy over the batch
  int correct = 0;
  std::vector<float> weights;
  std::vector<float> bias;
  Tensor features;  // d(loss)/d(features); empty unless requested
};

/// Mean softmax cross-entropy of the dense head and its gradients.
HeadGradients head_gradients(const DenseHead& head, const Tensor& features, std::span<const int> labels,
                             bool want_feature_grad = false);

/// Adam with the bias correction folded into the step size, as in Keras.
class Adam {
 public:
  explicit Adam(double learning_rate) : learning_rate_(learning_rate) {}

  /// Registers a parameter slot; call once per tensor in a fixed order.
  std::size_t add_slot(std::size_t size);
  void begin_step() { ++step_; }
  void update(std::size_t slot, std::span<float> params, std::span<const float> grads);
  long step_count() const { return step_; }

 private:
  double learning_rate_;
  long step_ = 0;
  std::vector<std::vector<float>> m_;
  std::vector<std::vector<float>> v_;
};

/// One optimizer bound to one model. Frozen models update only the head.
class Trainer {
 public:
  Trainer(ClassifierModel& model, const TrainConfig& config);

  /// Forward, backward and one Adam step on a batch of preprocessed images.
  HeadGradients step(const Tensor& images, std::span<const int> labels);
  /// Head-only step on precomputed features; valid only for frozen models.
  HeadGradients step_on_features(const Tensor& features, std::span<const int> labels);

 private:
  void apply_head(const HeadGradients& grads);

  ClassifierModel& model_;
  Adam adam_;
  std::size_t head_slot_ = 0;
  std::vector<std::vector<std::size_t>> backbone_slots_;
};

struct TrainResult {
  ClassifierModel model;  // weights from the best epoch
  ModelArtifact artifact;
  TrainingHistory history;
};

/// Trains on preprocessed tensors, checkpoints the best-validation epoch to
/// artifact_path and streams one JSON line per epoch to log (if given).
/// Throws EmptySplit, LabelOutOfRange, BadConfig, TrainingError.
TrainResult train_on_batches(ClassifierModel model, const Batch& train_set, const Batch& val_set,
                             const TrainConfig& config, const std::filesystem::path& artifact_path,
                             std::ostream* log = nullptr);

/// Preprocesses both splits with the model's input spec, then trains.
TrainResult train(ClassifierModel model, std::span<const ImageSample> train_split,
                  std::span<const ImageSample> val_split, const TrainConfig& config,
                  const std::filesystem::path& artifact_path, std::ostream* log = nullptr);

}  // namespace skinbench
