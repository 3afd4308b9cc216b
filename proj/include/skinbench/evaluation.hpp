#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "skinbench/dataset.hpp"
#include "skinbench/model_zoo.hpp"
#include "skinbench/preprocess.hpp"

namespace skinbench {

/// K x K counts. Rows are predicted classes, columns are actual classes.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  ConfusionMatrix(int k, std::vector<std::int64_t> counts, std::vector<std::string> class_names = {});

  int size() const { return k_; }
  std::int64_t at(int predicted, int actual) const { return counts_[static_cast<std::size_t>(predicted) * k_ + actual]; }
  std::span<const std::int64_t> counts() const { return counts_; }
  const std::vector<std::string>& class_names() const { return class_names_; }
  void set_class_names(std::vector<std::string> names) { class_names_ = std::move(names); }

  std::int64_t total() const;
  std::int64_t trace() const;
  std::int64_t row_sum(int predicted) const;
  std::int64_t column_sum(int actual) const;

  /// Element-wise sum of two partial matrices of the same size.
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  int k_ = 0;
  std::vector<std::int64_t> counts_;
  std::vector<std::string> class_names_;
};

/// counts[p][a] = |{i : predicted_i = p and actual_i = a}|. Throws LengthMismatch, IndexOutOfRange.
ConfusionMatrix confusion_matrix(std::span<const int> predicted, std::span<const int> actual, int k);

/// trace / total. Throws EmptyMatrix.
double accuracy(const ConfusionMatrix& cm);

struct Prediction {
  std::vector<double> probabilities;
  int top_index = 0;
};

/// Throws ShapeMismatch when the tensor does not match the model's input spec.
Prediction predict(const ClassifierModel& model, const InputTensor& tensor);
/// Arg-max class per image of a preprocessed batch.
std::vector<int> predict_classes(const ClassifierModel& model, const Tensor& images);

/// File size in MiB (bytes / 2^20). Throws IoError.
double measure_weight_size(const std::filesystem::path& artifact_path);
double measure_weight_size(const ModelArtifact& artifact);

/// Median wall-clock seconds of load_model over `repetitions` runs after one
/// discarded warm-up load. Throws BadConfig when repetitions < 3.
double measure_load_time(const std::filesystem::path& artifact_path, int repetitions = 5);

struct BenchmarkRecord {
  std::string model_id;
  double weight_size_mb = 0.0;
  double loading_time_s = 0.0;
  double accuracy_pct = 0.0;
  ConfusionMatrix confusion;
};

nlohmann::json to_json(const BenchmarkRecord& record);
BenchmarkRecord benchmark_record_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const ConfusionMatrix& cm);
ConfusionMatrix confusion_from_json(const nlohmann::json& doc);

struct EvaluationOptions {
  int load_repetitions = 5;
};

/// Weight size, load time, confusion matrix and accuracy on a test split.
/// Throws EmptySplit, ClassMismatch and anything load/preprocess raise.
BenchmarkRecord evaluate_model(const ModelArtifact& artifact, std::span<const ImageSample> test_split,
                               const EvaluationOptions& options = {});

}  // namespace skinbench
