#include "skinbench/commands.hpp"

#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "skinbench/dataset.hpp"
#include "skinbench/evaluation.hpp"
#include "skinbench/image_io.hpp"
#include "skinbench/model_zoo.hpp"
#include "skinbench/report.hpp"
#include "skinbench/training.hpp"

namespace fs = std::filesystem;

namespace skinbench {

int exit_code_for(ErrorKind kind) {
  return kind == ErrorKind::TrainingError ? kExitRuntime : kExitInput;
}

namespace {

// Duplicates everything written to it into two stream buffers.
class TeeBuf : public std::streambuf {
 public:
  TeeBuf(std::streambuf* a, std::streambuf* b) : a_(a), b_(b) {}

 protected:
  int overflow(int ch) override {
    if (ch == traits_type::eof()) return traits_type::not_eof(ch);
    const auto c = static_cast<char>(ch);
    if (a_->sputc(c) == traits_type::eof() || b_->sputc(c) == traits_type::eof()) return traits_type::eof();
    return ch;
  }
  int sync() override { return (a_->pubsync() == 0 && b_->pubsync() == 0) ? 0 : -1; }

 private:
  std::streambuf* a_;
  std::streambuf* b_;
};

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

void write_json(const fs::path& path, const nlohmann::json& doc) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << doc.dump(2) << '\n';
  out.close();
  if (!out) {
    Error e(ErrorKind::IoError, "cannot write " + path.string());
    throw e.with_path(path.string());
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir, ec)) {
    Error e(ErrorKind::IoError, "cannot create directory " + dir.string());
    throw e.with_path(dir.string());
  }
}

DatasetManifest scan(const RunConfig& config) {
  return scan_dataset(config.dataset_root, ScanOptions{config.accept_png});
}

SplitManifest resolve_split(const RunConfig& config, const DatasetManifest& manifest) {
  if (config.split_file) {
    std::ifstream in(*config.split_file);
    if (!in) {
      Error e(ErrorKind::IoError, "cannot read split file " + config.split_file->string());
      throw e.with_path(config.split_file->string());
    }
    try {
      return split_from_json(nlohmann::json::parse(in), manifest);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::BadConfig, std::string("split file is not valid JSON: ") + e.what());
    }
  }
  return split_dataset(manifest, config.ratios, config.seed);
}

fs::path model_path(const RunConfig& config, const std::string& id) {
  return config.output_dir / "models" / (sanitize_id(id) + ".sbm");
}

struct PreparedData {
  DatasetManifest manifest;
  SplitManifest split;
};

PreparedData prepare(const RunConfig& config) {
  PreparedData data;
  data.manifest = scan(config);
  data.split = resolve_split(config, data.manifest);
  ensure_dir(config.output_dir / "models");
  write_json(config.output_dir / "split.json", split_to_json(data.split, data.manifest));
  return data;
}

TrainResult train_backbone(const RunConfig& config, const PreparedData& data, const std::string& id,
                           std::ostream& log) {
  BuildOptions options;
  options.random_init = config.random_init;
  options.seed = config.seed;
  options.weights_dir = config.weights_dir;
  ClassifierModel model =
      build_classifier(id, static_cast<int>(data.manifest.class_names.size()), config.freeze, options);
  model.class_names = data.manifest.class_names;

  TrainConfig train_config = config.train;
  train_config.seed = config.seed;
  TrainResult result = train(std::move(model), data.split.train, data.split.val, train_config,
                             model_path(config, id), &log);
  write_json(config.output_dir / ("history_" + sanitize_id(id) + ".json"), to_json(result.history));
  return result;
}

TrainResult train_logged(const RunConfig& config, const PreparedData& data, const std::string& id,
                         std::ostream& console) {
  const fs::path log_path = config.output_dir / ("train_" + sanitize_id(id) + ".log");
  std::ofstream log_file(log_path, std::ios::trunc);
  if (!log_file) {
    Error e(ErrorKind::IoError, "cannot write " + log_path.string());
    throw e.with_path(log_path.string());
  }
  TeeBuf tee(console.rdbuf(), log_file.rdbuf());
  std::ostream log(&tee);
  return train_backbone(config, data, id, log);
}

nlohmann::json split_counts(const SplitManifest& split) {
  return {{"train", split.train.size()}, {"val", split.val.size()}, {"test", split.test.size()}};
}

}  // namespace

int cmd_scan(const RunConfig& config, bool as_json, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const DatasetManifest manifest = scan(config);
    ensure_dir(config.output_dir);
    write_json(config.output_dir / "manifest.json", manifest_to_json(manifest));
    if (as_json) {
      nlohmann::json summary;
      summary["root"] = manifest.root.string();
      summary["class_names"] = manifest.class_names;
      summary["counts_per_class"] = manifest.counts_per_class;
      summary["num_samples"] = manifest.samples.size();
      out << summary.dump(2) << '\n';
      return kExitOk;
    }
    std::size_t width = 5;
    for (const auto& name : manifest.class_names) width = std::max(width, name.size());
    out << std::left << std::setw(static_cast<int>(width) + 2) << "index" << std::setw(static_cast<int>(width) + 2)
        << "class" << "images\n";
    for (std::size_t i = 0; i < manifest.class_names.size(); ++i) {
      const auto& name = manifest.class_names[i];
      out << std::left << std::setw(static_cast<int>(width) + 2) << i << std::setw(static_cast<int>(width) + 2)
          << name << manifest.counts_per_class.at(name) << '\n';
    }
    out << "total: " << manifest.samples.size() << " images in " << manifest.class_names.size() << " classes\n";
    return kExitOk;
  });
}

int cmd_split(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const PreparedData data = prepare(config);
    out << "train " << data.split.train.size() << ", val " << data.split.val.size() << ", test "
        << data.split.test.size() << " -> " << (config.output_dir / "split.json").string() << '\n';
    return kExitOk;
  });
}

int cmd_train(const RunConfig& config, const std::string& backbone_id, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    validate(config);
    (void)find_backbone(backbone_id);
    const PreparedData data = prepare(config);
    const TrainResult result = train_logged(config, data, backbone_id, out);
    const auto& best = result.history.records[result.history.best_epoch];
    out << "saved " << result.artifact.path.string() << " (" << result.artifact.byte_size << " bytes), best epoch "
        << best.epoch << " val_accuracy " << best.val_accuracy << '\n';
    return kExitOk;
  });
}

int cmd_bench(const RunConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (config.backbones.empty()) throw Error(ErrorKind::EmptyInput, "no backbones configured");
    validate(config);
    const PreparedData data = prepare(config);
    const auto& ids = config.backbones;
    std::vector<ModelArtifact> artifacts(ids.size());
    std::vector<nlohmann::json> best_epochs(ids.size());

    if (config.parallel <= 1) {
      for (std::size_t i = 0; i < ids.size(); ++i) {
        out << "== training " << ids[i] << '\n';
        TrainResult r = train_logged(config, data, ids[i], out);
        artifacts[i] = r.artifact;
        best_epochs[i] = r.history.best_epoch;
      }
    } else {
      // Each worker owns whole models; logs are replayed after each model finishes.
      std::mutex console;
      std::vector<std::exception_ptr> failures(ids.size());
      std::atomic<std::size_t> next{0};
      auto worker = [&] {
        for (std::size_t i = next++; i < ids.size(); i = next++) {
          std::ostringstream buffer;
          try {
            TrainResult r = train_logged(config, data, ids[i], buffer);
            artifacts[i] = r.artifact;
            best_epochs[i] = r.history.best_epoch;
          } catch (...) {
            failures[i] = std::current_exception();
          }
          std::lock_guard<std::mutex> lock(console);
          out << "== trained " << ids[i] << '\n' << buffer.str();
        }
      };
      std::vector<std::thread> pool;
      const auto threads = std::min<std::size_t>(static_cast<std::size_t>(config.parallel), ids.size());
      for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
      for (const auto& f : failures) {
        if (f) std::rethrow_exception(f);
      }
    }

    // Timing runs serially after all training has finished.
    std::vector<BenchmarkRecord> records;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      out << "== evaluating " << ids[i] << '\n';
      records.push_back(evaluate_model(artifacts[i], data.split.test, {config.load_repetitions}));
    }

    nlohmann::json provenance;
    provenance["config"] = to_json(config);
    provenance["train_config"] = to_json(config.train);
    provenance["dataset_checksum"] = dataset_checksum(data.manifest);
    provenance["class_names"] = data.manifest.class_names;
    provenance["split"] = {{"seed", data.split.seed},
                           {"ratios", {data.split.ratios.train, data.split.ratios.val, data.split.ratios.test}},
                           {"counts", split_counts(data.split)}};
    nlohmann::json best = nlohmann::json::object();
    for (std::size_t i = 0; i < ids.size(); ++i) best[ids[i]] = best_epochs[i];
    provenance["best_epoch"] = best;

    const ComparisonTable table = build_table(std::move(records));
    emit_report(table, config.output_dir, provenance);
    out << '\n' << comparison_text(table);
    return kExitOk;
  });
}

int cmd_predict(const RunConfig& config, const fs::path& model_path, const fs::path& image_path, int top_k,
                std::ostream& out, std::ostream& err) {
  (void)config;
  return guarded(err, [&] {
    const ClassifierModel model = load_model(model_path);
    if (top_k < 1 || top_k > model.num_classes) {
      throw Error(ErrorKind::BadConfig,
                  "top_k must be in [1, " + std::to_string(model.num_classes) + "], got " + std::to_string(top_k));
    }
    const InputTensor tensor = preprocess_image(load_image(image_path), model.backbone.input);
    const Prediction prediction = predict(model, tensor);
    std::vector<int> order(prediction.probabilities.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return prediction.probabilities[a] > prediction.probabilities[b];
    });
    char line[512];
    for (int rank = 0; rank < top_k; ++rank) {
      const int c = order[rank];
      std::snprintf(line, sizeof(line), "%d\t%s\t%.9f\n", rank + 1, model.class_names[c].c_str(),
                    prediction.probabilities[c]);
      out << line;
    }
    return kExitOk;
  });
}

int cmd_report(const fs::path& summary_path, const std::string& sort_key, const fs::path& out_dir,
               std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    std::ifstream in(summary_path);
    if (!in) {
      Error e(ErrorKind::IoError, "cannot read " + summary_path.string());
      throw e.with_path(summary_path.string());
    }
    nlohmann::json summary;
    try {
      summary = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::BadConfig, std::string("summary is not valid JSON: ") + e.what());
    }
    const ComparisonTable table = build_table(records_from_summary(summary), sort_key_from_string(sort_key));
    emit_report(table, out_dir, summary.value("provenance", nlohmann::json::object()));
    out << comparison_text(table);
    return kExitOk;
  });
}

}  // namespace skinbench
