#include "skinbench/config.hpp"

#include <fstream>
#include <set>

#include "skinbench/error.hpp"
#include "skinbench/model_zoo.hpp"

namespace skinbench {

RunConfig default_run_config() {
  RunConfig config;
  for (const auto& spec : list_backbones()) config.backbones.push_back(spec.id);
  config.weights_dir = default_weights_dir();
  config.train.seed = config.seed;
  return config;
}

RunConfig run_config_from_json(const nlohmann::json& doc) {
  static const std::set<std::string> known = {
      "dataset_root", "ratios",     "seed",          "backbones",   "learning_rate",    "epochs",
      "batch_size",   "freeze",     "output_dir",    "split_file",  "weights_dir",      "random_init",
      "accept_png",   "parallel",   "load_repetitions"};
  if (!doc.is_object()) throw Error(ErrorKind::BadConfig, "config must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (!known.count(key)) throw Error(ErrorKind::BadConfig, "unknown config field '" + key + "'");
  }

  RunConfig config = default_run_config();
  try {
    if (doc.contains("dataset_root")) config.dataset_root = doc["dataset_root"].get<std::string>();
    if (doc.contains("ratios")) {
      const auto r = doc["ratios"].get<std::vector<double>>();
      if (r.size() != 3) throw Error(ErrorKind::BadRatios, "ratios needs three values (train, val, test)");
      config.ratios = {r[0], r[1], r[2]};
    }
    config.seed = doc.value("seed", config.seed);
    if (doc.contains("backbones")) config.backbones = doc["backbones"].get<std::vector<std::string>>();
    config.train.learning_rate = doc.value("learning_rate", config.train.learning_rate);
    config.train.epochs = doc.value("epochs", config.train.epochs);
    config.train.batch_size = doc.value("batch_size", config.train.batch_size);
    config.freeze = doc.value("freeze", config.freeze);
    if (doc.contains("output_dir")) config.output_dir = doc["output_dir"].get<std::string>();
    if (doc.contains("split_file")) config.split_file = doc["split_file"].get<std::string>();
    if (doc.contains("weights_dir")) config.weights_dir = doc["weights_dir"].get<std::string>();
    config.random_init = doc.value("random_init", config.random_init);
    config.accept_png = doc.value("accept_png", config.accept_png);
    config.parallel = doc.value("parallel", config.parallel);
    config.load_repetitions = doc.value("load_repetitions", config.load_repetitions);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::BadConfig, std::string("bad config value: ") + e.what());
  }
  config.train.seed = config.seed;
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    Error e(ErrorKind::IoError, "cannot read config " + path.string());
    throw e.with_path(path.string());
  }
  try {
    return run_config_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::BadConfig, std::string("config is not valid JSON: ") + e.what());
  }
}

nlohmann::json to_json(const RunConfig& config) {
  nlohmann::json doc;
  doc["dataset_root"] = config.dataset_root.string();
  doc["ratios"] = {config.ratios.train, config.ratios.val, config.ratios.test};
  doc["seed"] = config.seed;
  doc["backbones"] = config.backbones;
  doc["learning_rate"] = config.train.learning_rate;
  doc["epochs"] = config.train.epochs;
  doc["batch_size"] = config.train.batch_size;
  doc["freeze"] = config.freeze;
  doc["output_dir"] = config.output_dir.string();
  if (config.split_file) doc["split_file"] = config.split_file->string();
  doc["random_init"] = config.random_init;
  doc["accept_png"] = config.accept_png;
  doc["parallel"] = config.parallel;
  doc["load_repetitions"] = config.load_repetitions;
  return doc;
}

void validate(const RunConfig& config) {
  for (const auto& id : config.backbones) (void)find_backbone(id);
  std::set<std::string> unique(config.backbones.begin(), config.backbones.end());
  if (unique.size() != config.backbones.size()) throw Error(ErrorKind::DuplicateModel, "backbone listed twice");
  validate(config.train);
  if (config.load_repetitions < 3) throw Error(ErrorKind::BadConfig, "load_repetitions must be >= 3");
  if (config.parallel < 1) throw Error(ErrorKind::BadConfig, "parallel must be >= 1");
}

}  // namespace skinbench
