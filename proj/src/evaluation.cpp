#include "skinbench/evaluation.hpp"

#include <algorithm>
#include <chrono>

#include "skinbench/error.hpp"
#include "skinbench/kernels.hpp"
#include "skinbench/training.hpp"

namespace skinbench {

ConfusionMatrix::ConfusionMatrix(int k, std::vector<std::int64_t> counts, std::vector<std::string> class_names)
    : k_(k), counts_(std::move(counts)), class_names_(std::move(class_names)) {
  if (counts_.size() != static_cast<std::size_t>(k) * k) {
    throw Error(ErrorKind::ShapeMismatch, "confusion matrix needs K*K counts");
  }
}

std::int64_t ConfusionMatrix::total() const {
  std::int64_t s = 0;
  for (auto v : counts_) s += v;
  return s;
}

std::int64_t ConfusionMatrix::trace() const {
  std::int64_t s = 0;
  for (int i = 0; i < k_; ++i) s += at(i, i);
  return s;
}

std::int64_t ConfusionMatrix::row_sum(int predicted) const {
  std::int64_t s = 0;
  for (int a = 0; a < k_; ++a) s += at(predicted, a);
  return s;
}

std::int64_t ConfusionMatrix::column_sum(int actual) const {
  std::int64_t s = 0;
  for (int p = 0; p < k_; ++p) s += at(p, actual);
  return s;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.k_ != k_) throw Error(ErrorKind::ShapeMismatch, "cannot add confusion matrices of different size");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

ConfusionMatrix confusion_matrix(std::span<const int> predicted, std::span<const int> actual, int k) {
  if (predicted.size() != actual.size()) {
    throw Error(ErrorKind::LengthMismatch, std::to_string(predicted.size()) + " predictions vs " +
                                               std::to_string(actual.size()) + " labels");
  }
  if (k < 1) throw Error(ErrorKind::IndexOutOfRange, "K must be positive");
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] < 0 || predicted[i] >= k || actual[i] < 0 || actual[i] >= k) {
      Error e(ErrorKind::IndexOutOfRange, "entry " + std::to_string(i) + " outside [0, " + std::to_string(k) + ")");
      throw e.with_index(i);
    }
  }
  std::vector<std::int64_t> counts(static_cast<std::size_t>(k) * k);
  kernels::confusion_tally(predicted, actual, k, counts);
  return ConfusionMatrix(k, std::move(counts));
}

double accuracy(const ConfusionMatrix& cm) {
  const auto total = cm.total();
  if (total <= 0) throw Error(ErrorKind::EmptyMatrix, "confusion matrix has no samples");
  return static_cast<double>(cm.trace()) / static_cast<double>(total);
}

Prediction predict(const ClassifierModel& model, const InputTensor& tensor) {
  const auto& in = model.backbone.input;
  const auto& shape = tensor.data.shape();
  if (shape.n != 1 || shape.h != in.height || shape.w != in.width || shape.c != in.channels) {
    throw Error(ErrorKind::ShapeMismatch, "tensor does not match the model's input spec");
  }
  Prediction p;
  p.probabilities = predict_proba(model, tensor.data).front();
  p.top_index = argmax(p.probabilities);
  return p;
}

std::vector<int> predict_classes(const ClassifierModel& model, const Tensor& images) {
  std::vector<int> out;
  for (const auto& row : predict_proba(model, images)) out.push_back(argmax(row));
  return out;
}

double measure_weight_size(const std::filesystem::path& artifact_path) {
  std::error_code ec;
  const auto bytes = std::filesystem::file_size(artifact_path, ec);
  if (ec) {
    Error e(ErrorKind::IoError, "cannot stat " + artifact_path.string() + ": " + ec.message());
    throw e.with_path(artifact_path.string());
  }
  return static_cast<double>(bytes) / static_cast<double>(1 << 20);
}

double measure_weight_size(const ModelArtifact& artifact) { return measure_weight_size(artifact.path); }

double measure_load_time(const std::filesystem::path& artifact_path, int repetitions) {
  if (repetitions < 3) throw Error(ErrorKind::BadConfig, "load-time measurement needs at least 3 repetitions");
  using Clock = std::chrono::steady_clock;
  (void)load_model(artifact_path);
  std::vector<double> samples;
  samples.reserve(repetitions);
  for (int i = 0; i < repetitions; ++i) {
    const auto start = Clock::now();
    const ClassifierModel model = load_model(artifact_path);
    const auto stop = Clock::now();
    samples.push_back(std::chrono::duration<double>(stop - start).count());
  }
  std::sort(samples.begin(), samples.end());
  const std::size_t mid = samples.size() / 2;
  const double median = samples.size() % 2 == 1 ? samples[mid] : 0.5 * (samples[mid - 1] + samples[mid]);
  return std::max(median, 0.0);
}

nlohmann::json to_json(const ConfusionMatrix& cm) {
  nlohmann::json rows = nlohmann::json::array();
  for (int p = 0; p < cm.size(); ++p) {
    nlohmann::json row = nlohmann::json::array();
    for (int a = 0; a < cm.size(); ++a) row.push_back(cm.at(p, a));
    rows.push_back(row);
  }
  return {{"orientation", "rows=predicted,columns=actual"}, {"class_names", cm.class_names()}, {"counts", rows}};
}

ConfusionMatrix confusion_from_json(const nlohmann::json& doc) {
  const auto rows = doc.at("counts").get<std::vector<std::vector<std::int64_t>>>();
  const int k = static_cast<int>(rows.size());
  std::vector<std::int64_t> flat;
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != k) throw Error(ErrorKind::ShapeMismatch, "confusion matrix is not square");
    flat.insert(flat.end(), row.begin(), row.end());
  }
  return ConfusionMatrix(k, std::move(flat), doc.value("class_names", std::vector<std::string>{}));
}

nlohmann::json to_json(const BenchmarkRecord& r) {
  return {{"model_id", r.model_id},
          {"weight_size_mb", r.weight_size_mb},
          {"loading_time_s", r.loading_time_s},
          {"accuracy_pct", r.accuracy_pct},
          {"confusion", to_json(r.confusion)}};
}

BenchmarkRecord benchmark_record_from_json(const nlohmann::json& doc) {
  BenchmarkRecord r;
  r.model_id = doc.at("model_id").get<std::string>();
  r.weight_size_mb = doc.at("weight_size_mb").get<double>();
  r.loading_time_s = doc.at("loading_time_s").get<double>();
  r.accuracy_pct = doc.at("accuracy_pct").get<double>();
  r.confusion = confusion_from_json(doc.at("confusion"));
  return r;
}

BenchmarkRecord evaluate_model(const ModelArtifact& artifact, std::span<const ImageSample> test_split,
                               const EvaluationOptions& options) {
  if (test_split.empty()) throw Error(ErrorKind::EmptySplit, "test split is empty");
  for (std::size_t i = 0; i < test_split.size(); ++i) {
    const auto& s = test_split[i];
    const bool known = s.class_index >= 0 && static_cast<std::size_t>(s.class_index) < artifact.class_names.size();
    if (!known || artifact.class_names[s.class_index] != s.class_name) {
      Error e(ErrorKind::ClassMismatch, "test sample " + std::to_string(i) + " (" + s.class_name +
                                            ") does not match the artifact's class list");
      throw e.with_index(i);
    }
  }

  BenchmarkRecord record;
  record.model_id = artifact.backbone_id;
  record.weight_size_mb = measure_weight_size(artifact);
  record.loading_time_s = measure_load_time(artifact.path, options.load_repetitions);

  const ClassifierModel model = load_model(artifact.path);
  const Batch batch = preprocess_batch(test_split, model.backbone.input);
  const std::vector<int> predicted = predict_classes(model, batch.images);
  record.confusion = confusion_matrix(predicted, batch.labels, model.num_classes);
  record.confusion.set_class_names(model.class_names);
  record.accuracy_pct = 100.0 * accuracy(record.confusion);
  return record;
}

}  // namespace skinbench
