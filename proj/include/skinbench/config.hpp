#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "skinbench/dataset.hpp"
#include "skinbench/training.hpp"

namespace skinbench {

/// Parameters for one pipeline run. Loaded from a JSON file; command-line flags
/// override individual fields afterwards.
struct RunConfig {
  std::filesystem::path dataset_root;
  SplitRatios ratios;
  std::uint64_t seed = 42;  // split, head init and batch order
  std::vector<std::string> backbones;  // omitted in the file means all registered backbones
  TrainConfig train;
  bool freeze = true;
  std::filesystem::path output_dir = "skinbench-out";
  std::optional<std::filesystem::path> split_file;
  std::filesystem::path weights_dir;
  bool random_init = false;
  bool accept_png = false;
  int load_repetitions = 5;
  int parallel = 1;
};

/// Defaults with every registered backbone selected.
RunConfig default_run_config();

/// Throws BadConfig on malformed JSON or unknown fields.
RunConfig run_config_from_json(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& config);

/// Checks registered backbone ids, ratio sanity and training parameters.
void validate(const RunConfig& config);

}  // namespace skinbench
