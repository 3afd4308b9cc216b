#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace skinbench {

struct ImageSample {
  std::filesystem::path path;
  std::string class_name;
  int class_index = 0;

  friend bool operator==(const ImageSample&, const ImageSample&) = default;
};

struct DatasetManifest {
  std::filesystem::path root;
  std::vector<std::string> class_names;  // sorted, unique; position = label index
  std::vector<ImageSample> samples;      // sorted by path
  std::map<std::string, std::size_t> counts_per_class;

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

struct SplitRatios {
  double train = 0.70;
  double val = 0.15;
  double test = 0.15;

  friend bool operator==(const SplitRatios&, const SplitRatios&) = default;
};

struct SplitManifest {
  std::vector<ImageSample> train;
  std::vector<ImageSample> val;
  std::vector<ImageSample> test;
  std::uint64_t seed = 0;
  SplitRatios ratios;

  friend bool operator==(const SplitManifest&, const SplitManifest&) = default;
};

struct ScanOptions {
  bool accept_png = false;
};

bool is_supported_image(const std::filesystem::path& path, const ScanOptions& options = {});

/// Each immediate subdirectory of root is a class. Throws MissingRoot or EmptyDataset.
DatasetManifest scan_dataset(const std::filesystem::path& root, const ScanOptions& options = {});

/// Stratified split. Per class: seeded shuffle, then train = floor(n * r_train),
/// val = floor(n * r_val), remainder to test; an empty train bucket takes one
/// sample from the largest other bucket.
SplitManifest split_dataset(const DatasetManifest& manifest, const SplitRatios& ratios, std::uint64_t seed);

/// Relative-path JSON form, re-materialised against a manifest of the same root.
nlohmann::json split_to_json(const SplitManifest& split, const DatasetManifest& manifest);
SplitManifest split_from_json(const nlohmann::json& doc, const DatasetManifest& manifest);

nlohmann::json manifest_to_json(const DatasetManifest& manifest);

/// SHA-256 over the sorted relative paths, labels and file contents.
std::string dataset_checksum(const DatasetManifest& manifest);

}  // namespace skinbench
