#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "skinbench/network.hpp"
#include "skinbench/preprocess.hpp"

namespace skinbench {

struct BackboneSpec {
  std::string id;
  InputSpec input;
  std::string weights_source;
  int feature_dim = 0;
};

/// The 11 registered backbones in registry order.
const std::vector<BackboneSpec>& list_backbones();

/// Throws UnknownBackbone.
const BackboneSpec& find_backbone(std::string_view id);

/// File-name-safe form of a backbone id ("NASNet Mobile" -> "NASNet_Mobile").
std::string sanitize_id(std::string_view id);

/// $SKINBENCH_WEIGHTS_DIR, else $HOME/.cache/skinbench/weights.
std::filesystem::path default_weights_dir();
inline constexpr const char* kWeightsDirEnv = "SKINBENCH_WEIGHTS_DIR";

/// Path of the cached weight file for a backbone: <dir>/<sanitized id>.sbw
std::filesystem::path weights_path(const std::filesystem::path& dir, std::string_view id);

/// Seeded stand-in feature extractor with the registry's feature width. The seed
/// depends only on the backbone id, so every build yields the same weights.
Network random_init_backbone(const BackboneSpec& spec);

struct BackboneWeights {
  BackboneSpec spec;
  Network network;
};

void save_backbone_weights(const std::filesystem::path& path, const BackboneWeights& weights);
/// Throws IoError / CorruptArtifact, or ShapeMismatch if the graph does not fit its input.
BackboneWeights load_backbone_weights(const std::filesystem::path& path);

struct DenseHead {
  int in_dim = 0;
  int out_dim = 0;
  std::vector<float> weights;  // [in_dim][out_dim]
  std::vector<float> bias;     // [out_dim]

  std::uint64_t checksum() const;
};

struct ClassifierModel {
  BackboneSpec backbone;
  Network extractor;
  DenseHead head;
  int num_classes = 0;
  bool frozen = true;
  std::vector<std::string> class_names;
  nlohmann::json training_config = nlohmann::json::object();
};

struct BuildOptions {
  bool random_init = false;
  std::uint64_t seed = 0;  // head initialisation
  std::filesystem::path weights_dir = default_weights_dir();
};

/// Frozen (or trainable) extractor followed by global average pooling and a dense
/// softmax head with Glorot-uniform init. Throws UnknownBackbone, BadClassCount,
/// WeightsUnavailable.
ClassifierModel build_classifier(std::string_view backbone_id, int num_classes, bool freeze,
                                 const BuildOptions& options = {});

/// Pooled backbone features, shape (n, 1, 1, feature_dim).
Tensor extract_features(const ClassifierModel& model, const Tensor& images);
/// Head logits for pooled features, shape (n, 1, 1, num_classes).
Tensor head_logits(const DenseHead& head, const Tensor& features);
/// Row-wise softmax computed in double precision.
std::vector<std::vector<double>> softmax_rows(const Tensor& logits);
std::vector<double> softmax(std::span<const float> logits);

/// Class probabilities per image; throws ShapeMismatch if images do not match the input spec.
std::vector<std::vector<double>> predict_proba(const ClassifierModel& model, const Tensor& images);

struct ModelArtifact {
  std::filesystem::path path;
  std::string backbone_id;
  std::vector<std::string> class_names;
  nlohmann::json training_config;
  std::uintmax_t byte_size = 0;
};

/// Throws IoError.
ModelArtifact save_model(const ClassifierModel& model, const std::filesystem::path& path);
/// Throws IoError or CorruptArtifact.
ClassifierModel load_model(const std::filesystem::path& path);
/// Artifact metadata from an existing file (reads the whole file).
ModelArtifact describe_artifact(const std::filesystem::path& path);

}  // namespace skinbench
