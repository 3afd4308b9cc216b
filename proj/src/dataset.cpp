#include "skinbench/dataset.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <memory>
#include <unordered_map>

#include "skinbench/error.hpp"
#include "skinbench/rng.hpp"

namespace fs = std::filesystem;

namespace skinbench {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string relative_key(const fs::path& path, const fs::path& root) {
  return path.lexically_relative(root).generic_string();
}

// Guards against products like 0.15 * 20 landing a hair under an integer.
std::size_t floor_count(std::size_t n, double ratio) {
  return static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratio + 1e-9));
}

}  // namespace

bool is_supported_image(const fs::path& path, const ScanOptions& options) {
  const std::string ext = lower(path.extension().string());
  if (ext == ".jpg" || ext == ".jpeg") return true;
  return options.accept_png && ext == ".png";
}

DatasetManifest scan_dataset(const fs::path& root, const ScanOptions& options) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    Error e(ErrorKind::MissingRoot, "dataset root not found: " + root.string());
    throw e.with_path(root.string());
  }

  DatasetManifest manifest;
  manifest.root = root;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) manifest.class_names.push_back(entry.path().filename().string());
  }
  std::sort(manifest.class_names.begin(), manifest.class_names.end());

  for (std::size_t ci = 0; ci < manifest.class_names.size(); ++ci) {
    const std::string& name = manifest.class_names[ci];
    std::size_t count = 0;
    for (const auto& entry : fs::directory_iterator(root / name)) {
      if (!entry.is_regular_file() || !is_supported_image(entry.path(), options)) continue;
      manifest.samples.push_back({entry.path(), name, static_cast<int>(ci)});
      ++count;
    }
    manifest.counts_per_class[name] = count;
  }
  std::sort(manifest.samples.begin(), manifest.samples.end(),
            [](const ImageSample& a, const ImageSample& b) { return a.path < b.path; });

  if (manifest.samples.empty()) {
    Error e(ErrorKind::EmptyDataset, "no supported images under " + root.string());
    throw e.with_path(root.string());
  }
  return manifest;
}

SplitManifest split_dataset(const DatasetManifest& manifest, const SplitRatios& ratios, std::uint64_t seed) {
  const std::array<double, 3> parts{ratios.train, ratios.val, ratios.test};
  for (double r : parts) {
    if (!(r >= 0.0 && r <= 1.0)) throw Error(ErrorKind::BadRatios, "each ratio must lie in [0, 1]");
  }
  if (std::abs(parts[0] + parts[1] + parts[2] - 1.0) > 1e-9) {
    throw Error(ErrorKind::BadRatios, "ratios must sum to 1");
  }

  std::vector<std::vector<const ImageSample*>> by_class(manifest.class_names.size());
  for (const auto& s : manifest.samples) by_class.at(static_cast<std::size_t>(s.class_index)).push_back(&s);

  SplitManifest split;
  split.seed = seed;
  split.ratios = ratios;
  Rng rng(seed);
  for (std::size_t ci = 0; ci < by_class.size(); ++ci) {
    const auto& members = by_class[ci];
    const std::size_t n = members.size();
    if (n == 0) throw Error(ErrorKind::EmptyClass, "class '" + manifest.class_names[ci] + "' has no samples");

    std::size_t n_train = floor_count(n, ratios.train);
    std::size_t n_val = floor_count(n, ratios.val);
    std::size_t n_test = n - n_train - n_val;
    if (n_train == 0) {
      if (n_test >= n_val) {
        --n_test;
      } else {
        --n_val;
      }
      n_train = 1;
    }

    const auto order = seeded_permutation(n, rng);
    for (std::size_t i = 0; i < n; ++i) {
      const ImageSample& s = *members[order[i]];
      if (i < n_train) {
        split.train.push_back(s);
      } else if (i < n_train + n_val) {
        split.val.push_back(s);
      } else {
        split.test.push_back(s);
      }
    }
  }
  return split;
}

nlohmann::json split_to_json(const SplitManifest& split, const DatasetManifest& manifest) {
  auto paths = [&](const std::vector<ImageSample>& part) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& s : part) out.push_back(relative_key(s.path, manifest.root));
    return out;
  };
  nlohmann::json doc;
  doc["format"] = "skinbench-split/1";
  doc["seed"] = split.seed;
  doc["ratios"] = {{"train", split.ratios.train}, {"val", split.ratios.val}, {"test", split.ratios.test}};
  doc["class_names"] = manifest.class_names;
  doc["train"] = paths(split.train);
  doc["val"] = paths(split.val);
  doc["test"] = paths(split.test);
  return doc;
}

SplitManifest split_from_json(const nlohmann::json& doc, const DatasetManifest& manifest) {
  try {
    if (doc.at("class_names").get<std::vector<std::string>>() != manifest.class_names) {
      throw Error(ErrorKind::BadConfig, "split file class list does not match the dataset");
    }
    std::unordered_map<std::string, const ImageSample*> index;
    for (const auto& s : manifest.samples) index.emplace(relative_key(s.path, manifest.root), &s);

    auto resolve = [&](const nlohmann::json& list) {
      std::vector<ImageSample> out;
      for (const auto& item : list) {
        const auto key = item.get<std::string>();
        auto it = index.find(key);
        if (it == index.end()) throw Error(ErrorKind::BadConfig, "split file references missing sample " + key);
        out.push_back(*it->second);
      }
      return out;
    };
    SplitManifest split;
    split.seed = doc.at("seed").get<std::uint64_t>();
    split.ratios = {doc.at("ratios").at("train").get<double>(), doc.at("ratios").at("val").get<double>(),
                    doc.at("ratios").at("test").get<double>()};
    split.train = resolve(doc.at("train"));
    split.val = resolve(doc.at("val"));
    split.test = resolve(doc.at("test"));
    return split;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::BadConfig, std::string("malformed split file: ") + e.what());
  }
}

nlohmann::json manifest_to_json(const DatasetManifest& manifest) {
  nlohmann::json doc;
  doc["root"] = manifest.root.string();
  doc["class_names"] = manifest.class_names;
  nlohmann::json counts = nlohmann::json::object();
  for (const auto& [name, count] : manifest.counts_per_class) counts[name] = count;
  doc["counts_per_class"] = counts;
  doc["num_samples"] = manifest.samples.size();
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : manifest.samples) {
    samples.push_back({{"path", relative_key(s.path, manifest.root)}, {"class_index", s.class_index}});
  }
  doc["samples"] = samples;
  return doc;
}

std::string dataset_checksum(const DatasetManifest& manifest) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  std::vector<char> buffer(1 << 16);
  for (const auto& s : manifest.samples) {
    const std::string header = relative_key(s.path, manifest.root) + '\0' + std::to_string(s.class_index) + '\0';
    EVP_DigestUpdate(ctx.get(), header.data(), header.size());
    std::ifstream in(s.path, std::ios::binary);
    if (!in) {
      Error e(ErrorKind::IoError, "cannot read " + s.path.string());
      throw e.with_path(s.path.string());
    }
    while (in) {
      in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
      EVP_DigestUpdate(ctx.get(), buffer.data(), static_cast<std::size_t>(in.gcount()));
    }
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 0xF];
  }
  return hex;
}

}  // namespace skinbench
