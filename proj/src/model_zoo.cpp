#include "skinbench/model_zoo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "skinbench/container.hpp"
#include "skinbench/error.hpp"
#include "skinbench/kernels.hpp"
#include "skinbench/rng.hpp"

namespace skinbench {

namespace {

constexpr const char* kPretrainedSource = "imagenet (keras-applications export, include_top=False)";

BackboneSpec entry(const char* id, int size, ValueRange range, int feature_dim) {
  return {id, InputSpec{size, size, 3, range}, kPretrainedSource, feature_dim};
}

// Stand-in architecture for random_init mode. "plain" stacks full 3x3 convolutions
// (VGG-like); otherwise depthwise-separable blocks. The last width is the
// registry feature_dim so heads match the genuine backbones' shape.
struct Surrogate {
  bool plain = false;
  int stem = 16;
  std::vector<int> widths;
  int extra_plain_layers = 0;
};

Surrogate surrogate_for(std::string_view id) {
  if (id == "VGG16") return {true, 32, {64, 128, 256, 512}, 0};
  if (id == "VGG19") return {true, 32, {64, 128, 256, 512}, 1};
  if (id == "MobileNet") return {false, 16, {32, 64, 128, 256, 1024}};
  if (id == "NASNet Mobile") return {false, 16, {32, 64, 128, 256, 1056}};
  if (id == "DenseNet121") return {false, 24, {48, 96, 192, 384, 1024}};
  if (id == "DenseNet169") return {false, 24, {48, 96, 256, 512, 1664}};
  if (id == "DenseNet201") return {false, 32, {64, 128, 256, 640, 1920}};
  if (id == "ResNet50") return {false, 32, {64, 128, 256, 512, 2048}};
  if (id == "Xception") return {false, 32, {64, 128, 256, 728, 2048}};
  if (id == "InceptionV3") return {false, 32, {64, 128, 288, 768, 2048}};
  return {false, 32, {64, 192, 320, 1088, 1536}};  // InceptionResNetV2
}

LayerConfig conv(int filters, int kernel, int stride, bool bias) {
  LayerConfig c;
  c.kind = LayerKind::Conv2D;
  c.filters = filters;
  c.kernel = kernel;
  c.stride = stride;
  c.padding = Padding::Same;
  c.use_bias = bias;
  return c;
}

LayerConfig depthwise(int stride) {
  LayerConfig c;
  c.kind = LayerKind::DepthwiseConv2D;
  c.kernel = 3;
  c.stride = stride;
  c.padding = Padding::Same;
  return c;
}

LayerConfig simple(LayerKind kind) {
  LayerConfig c;
  c.kind = kind;
  return c;
}

LayerConfig max_pool(int size) {
  LayerConfig c;
  c.kind = LayerKind::MaxPool2D;
  c.kernel = size;
  c.stride = size;
  return c;
}

std::vector<LayerConfig> surrogate_layers(const Surrogate& s) {
  std::vector<LayerConfig> layers;
  if (s.plain) {
    layers.push_back(conv(s.stem, 3, 2, true));
    layers.push_back(simple(LayerKind::ReLU));
    layers.push_back(max_pool(2));
    for (std::size_t i = 0; i < s.widths.size(); ++i) {
      const bool last = i + 1 == s.widths.size();
      layers.push_back(conv(s.widths[i], 3, last ? 1 : 2, true));
      layers.push_back(simple(LayerKind::ReLU));
    }
    for (int i = 0; i < s.extra_plain_layers; ++i) {
      layers.push_back(conv(s.widths.back(), 3, 1, true));
      layers.push_back(simple(LayerKind::ReLU));
    }
  } else {
    layers.push_back(conv(s.stem, 3, 2, false));
    layers.push_back(simple(LayerKind::Affine));
    layers.push_back(simple(LayerKind::ReLU6));
    for (std::size_t i = 0; i < s.widths.size(); ++i) {
      const bool last = i + 1 == s.widths.size();
      layers.push_back(depthwise(last ? 1 : 2));
      layers.push_back(simple(LayerKind::Affine));
      layers.push_back(simple(LayerKind::ReLU6));
      layers.push_back(conv(s.widths[i], 1, 1, false));
      layers.push_back(simple(LayerKind::Affine));
      layers.push_back(simple(LayerKind::ReLU6));
    }
  }
  layers.push_back(simple(LayerKind::GlobalAvgPool));
  return layers;
}

nlohmann::json input_to_json(const InputSpec& input) {
  return {{"height", input.height},
          {"width", input.width},
          {"channels", input.channels},
          {"value_range", std::string(to_string(input.value_range))}};
}

InputSpec input_from_json(const nlohmann::json& doc) {
  InputSpec input;
  input.height = doc.at("height").get<int>();
  input.width = doc.at("width").get<int>();
  input.channels = doc.at("channels").get<int>();
  input.value_range = value_range_from_string(doc.at("value_range").get<std::string>());
  if (input.height < 1 || input.width < 1 || input.channels != 3) {
    throw Error(ErrorKind::CorruptArtifact, "invalid input geometry");
  }
  return input;
}

nlohmann::json layers_to_json(const Network& net) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& layer : net.layers()) out.push_back(layer_to_json(layer.config));
  return out;
}

// Rebuilds a network from layer configs, consuming tensors[cursor...] in order.
Network network_from(const nlohmann::json& layers, std::vector<std::vector<float>>& tensors, std::size_t& cursor,
                     int in_channels) {
  std::vector<Layer> built;
  for (const auto& doc : layers) built.push_back({layer_from_json(doc), {}});
  Network net(std::move(built));
  net.allocate(in_channels);
  for (auto& layer : net.layers()) {
    for (auto& p : layer.params) {
      if (cursor >= tensors.size() || tensors[cursor].size() != p.size()) {
        throw Error(ErrorKind::CorruptArtifact, "parameter tensor does not match layer graph");
      }
      p = std::move(tensors[cursor++]);
    }
  }
  return net;
}

void append_params(const Network& net, std::vector<std::vector<float>>& tensors) {
  for (const auto& layer : net.layers())
    for (const auto& p : layer.params) tensors.push_back(p);
}

void ensure_pooled(Network& net) {
  if (net.layers().empty() || net.layers().back().config.kind != LayerKind::GlobalAvgPool) {
    net.layers().push_back({simple(LayerKind::GlobalAvgPool), {}});
  }
}

int feature_width(const Network& net, const InputSpec& input) {
  return net.output_shape({1, input.height, input.width, input.channels}).c;
}

nlohmann::json backbone_to_json(const BackboneSpec& spec) {
  return {{"id", spec.id},
          {"input", input_to_json(spec.input)},
          {"weights_source", spec.weights_source},
          {"feature_dim", spec.feature_dim}};
}

Error corrupt(const std::filesystem::path& path, const std::string& why) {
  Error e(ErrorKind::CorruptArtifact, path.string() + ": " + why);
  e.with_path(path.string());
  return e;
}

}  // namespace

const std::vector<BackboneSpec>& list_backbones() {
  static const std::vector<BackboneSpec> registry = {
      entry("MobileNet", 224, ValueRange::Unit, 1024),
      entry("VGG16", 224, ValueRange::Unit, 512),
      entry("VGG19", 224, ValueRange::Unit, 512),
      entry("Xception", 299, ValueRange::Symmetric, 2048),
      entry("ResNet50", 224, ValueRange::Unit, 2048),
      entry("InceptionV3", 299, ValueRange::Symmetric, 2048),
      entry("InceptionResNetV2", 299, ValueRange::Symmetric, 1536),
      entry("DenseNet121", 224, ValueRange::Unit, 1024),
      entry("DenseNet169", 224, ValueRange::Unit, 1664),
      entry("DenseNet201", 224, ValueRange::Unit, 1920),
      entry("NASNet Mobile", 224, ValueRange::Unit, 1056),
  };
  return registry;
}

const BackboneSpec& find_backbone(std::string_view id) {
  const auto& all = list_backbones();
  auto it = std::find_if(all.begin(), all.end(), [&](const BackboneSpec& s) { return s.id == id; });
  if (it == all.end()) throw Error(ErrorKind::UnknownBackbone, "no backbone named '" + std::string(id) + "'");
  return *it;
}

InputSpec required_input(std::string_view backbone_id) { return find_backbone(backbone_id).input; }

std::string sanitize_id(std::string_view id) {
  std::string out(id);
  for (char& c : out) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '.') c = '_';
  }
  return out;
}

std::filesystem::path default_weights_dir() {
  if (const char* env = std::getenv(kWeightsDirEnv); env != nullptr && *env != '\0') return env;
  if (const char* home = std::getenv("HOME"); home != nullptr && *home != '\0') {
    return std::filesystem::path(home) / ".cache" / "skinbench" / "weights";
  }
  return ".skinbench-weights";
}

std::filesystem::path weights_path(const std::filesystem::path& dir, std::string_view id) {
  return dir / (sanitize_id(id) + ".sbw");
}

Network random_init_backbone(const BackboneSpec& spec) {
  std::vector<Layer> layers;
  for (const auto& cfg : surrogate_layers(surrogate_for(spec.id))) layers.push_back({cfg, {}});
  Network net(std::move(layers));
  net.allocate(spec.input.channels);

  Rng rng(fnv1a("skinbench/random_init/" + spec.id));
  int channels = spec.input.channels;
  for (auto& layer : net.layers()) {
    const auto& cfg = layer.config;
    if (cfg.kind == LayerKind::Conv2D || cfg.kind == LayerKind::DepthwiseConv2D) {
      const int fan_in = cfg.kernel * cfg.kernel * (cfg.kind == LayerKind::Conv2D ? channels : 1);
      const float scale = std::sqrt(2.0f / static_cast<float>(fan_in));
      for (float& w : layer.params[0]) w = normal(rng) * scale;
    }
    if (cfg.kind == LayerKind::Conv2D) channels = cfg.filters;
  }

  // Shift the stem so a mid-range input gives zero pre-activation.
  const float mid = spec.input.value_range == ValueRange::Unit ? 0.5f : 0.0f;
  auto& graph = net.layers();
  const auto& stem = graph.front();
  const int filters = stem.config.filters;
  std::vector<float> shift(static_cast<std::size_t>(filters), 0.0f);
  for (std::size_t i = 0; i < stem.params[0].size(); ++i) shift[i % filters] -= mid * stem.params[0][i];
  if (stem.config.use_bias) {
    graph.front().params[1] = shift;
  } else if (graph.size() > 1 && graph[1].config.kind == LayerKind::Affine) {
    graph[1].params[1] = shift;
  }
  return net;
}

void save_backbone_weights(const std::filesystem::path& path, const BackboneWeights& weights) {
  Container c;
  c.header = {{"format", "skinbench-backbone"},
              {"id", weights.spec.id},
              {"input", input_to_json(weights.spec.input)},
              {"weights_source", weights.spec.weights_source},
              {"layers", layers_to_json(weights.network)}};
  append_params(weights.network, c.tensors);
  write_container(path, kWeightsMagic, c);
}

BackboneWeights load_backbone_weights(const std::filesystem::path& path) {
  Container c = read_container(path, kWeightsMagic);
  try {
    BackboneWeights out;
    out.spec.id = c.header.at("id").get<std::string>();
    out.spec.input = input_from_json(c.header.at("input"));
    out.spec.weights_source = c.header.value("weights_source", std::string(kPretrainedSource));
    std::size_t cursor = 0;
    out.network = network_from(c.header.at("layers"), c.tensors, cursor, out.spec.input.channels);
    if (cursor != c.tensors.size()) throw corrupt(path, "unused parameter tensors");
    ensure_pooled(out.network);
    out.spec.feature_dim = feature_width(out.network, out.spec.input);
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw corrupt(path, std::string("malformed header: ") + e.what());
  }
}

std::uint64_t DenseHead::checksum() const {
  std::uint64_t h = 1469598103934665603ull;
  for (const auto* v : {&weights, &bias}) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(v->data());
    for (std::size_t i = 0; i < v->size() * sizeof(float); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  }
  return h;
}

ClassifierModel build_classifier(std::string_view backbone_id, int num_classes, bool freeze,
                                 const BuildOptions& options) {
  const BackboneSpec& registered = find_backbone(backbone_id);
  if (num_classes < 2) {
    throw Error(ErrorKind::BadClassCount, "need at least 2 classes, got " + std::to_string(num_classes));
  }

  ClassifierModel model;
  model.backbone = registered;
  if (options.random_init) {
    model.backbone.weights_source = "random_init";
    model.extractor = random_init_backbone(registered);
  } else {
    const auto path = weights_path(options.weights_dir, registered.id);
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) {
      Error e(ErrorKind::WeightsUnavailable,
              "no cached weights for " + registered.id + " at " + path.string() +
                  " (export them with tools/export_keras_backbone.py or use random_init)");
      throw e.with_path(path.string());
    }
    BackboneWeights loaded = load_backbone_weights(path);
    if (loaded.spec.id != registered.id) {
      throw corrupt(path, "weight file is for '" + loaded.spec.id + "', expected '" + registered.id + "'");
    }
    model.backbone.input.value_range = loaded.spec.input.value_range;
    model.backbone.weights_source = loaded.spec.weights_source;
    if (loaded.spec.input.height != registered.input.height || loaded.spec.input.width != registered.input.width) {
      throw corrupt(path, "weight file input geometry differs from the registry");
    }
    model.extractor = std::move(loaded.network);
  }
  ensure_pooled(model.extractor);
  model.backbone.feature_dim = feature_width(model.extractor, model.backbone.input);

  model.num_classes = num_classes;
  model.frozen = freeze;
  for (int i = 0; i < num_classes; ++i) model.class_names.push_back("class_" + std::to_string(i));

  auto& head = model.head;
  head.in_dim = model.backbone.feature_dim;
  head.out_dim = num_classes;
  head.weights.resize(static_cast<std::size_t>(head.in_dim) * head.out_dim);
  head.bias.assign(head.out_dim, 0.0f);
  Rng rng(options.seed);
  const float limit = std::sqrt(6.0f / static_cast<float>(head.in_dim + head.out_dim));
  for (float& w : head.weights) w = (2.0f * uniform01(rng) - 1.0f) * limit;
  return model;
}

Tensor extract_features(const ClassifierModel& model, const Tensor& images) {
  const auto& in = model.backbone.input;
  if (images.h() != in.height || images.w() != in.width || images.c() != in.channels) {
    throw Error(ErrorKind::ShapeMismatch, "input tensor is " + std::to_string(images.h()) + "x" +
                                              std::to_string(images.w()) + "x" + std::to_string(images.c()) +
                                              ", backbone expects " + std::to_string(in.height) + "x" +
                                              std::to_string(in.width) + "x" + std::to_string(in.channels));
  }
  return model.extractor.forward(images);
}

Tensor head_logits(const DenseHead& head, const Tensor& features) {
  if (static_cast<int>(features.item_size()) != head.in_dim) {
    throw Error(ErrorKind::ShapeMismatch, "feature width does not match head");
  }
  Tensor logits;
  kernels::dense_forward(features, head.weights, head.bias, head.out_dim, logits);
  return logits;
}

std::vector<double> softmax(std::span<const float> logits) {
  std::vector<double> p(logits.size());
  if (logits.empty()) return p;
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(static_cast<double>(logits[i]) - peak);
    total += p[i];
  }
  for (double& v : p) v /= total;
  return p;
}

std::vector<std::vector<double>> softmax_rows(const Tensor& logits) {
  std::vector<std::vector<double>> rows;
  rows.reserve(logits.n());
  for (int i = 0; i < logits.n(); ++i) rows.push_back(softmax(logits.item(i)));
  return rows;
}

std::vector<std::vector<double>> predict_proba(const ClassifierModel& model, const Tensor& images) {
  return softmax_rows(head_logits(model.head, extract_features(model, images)));
}

ModelArtifact save_model(const ClassifierModel& model, const std::filesystem::path& path) {
  Container c;
  c.header = {{"format", "skinbench-model"},
              {"backbone", backbone_to_json(model.backbone)},
              {"layers", layers_to_json(model.extractor)},
              {"head", {{"in_dim", model.head.in_dim}, {"out_dim", model.head.out_dim}}},
              {"num_classes", model.num_classes},
              {"class_names", model.class_names},
              {"frozen", model.frozen},
              {"training_config", model.training_config}};
  append_params(model.extractor, c.tensors);
  c.tensors.push_back(model.head.weights);
  c.tensors.push_back(model.head.bias);
  write_container(path, kModelMagic, c);

  ModelArtifact artifact;
  artifact.path = path;
  artifact.backbone_id = model.backbone.id;
  artifact.class_names = model.class_names;
  artifact.training_config = model.training_config;
  artifact.byte_size = std::filesystem::file_size(path);
  return artifact;
}

ClassifierModel load_model(const std::filesystem::path& path) {
  Container c = read_container(path, kModelMagic);
  try {
    const auto& h = c.header;
    if (h.at("format").get<std::string>() != "skinbench-model") throw corrupt(path, "not a model artifact");
    ClassifierModel model;
    const auto& b = h.at("backbone");
    model.backbone.id = b.at("id").get<std::string>();
    model.backbone.input = input_from_json(b.at("input"));
    model.backbone.weights_source = b.at("weights_source").get<std::string>();
    model.backbone.feature_dim = b.at("feature_dim").get<int>();
    std::size_t cursor = 0;
    model.extractor = network_from(h.at("layers"), c.tensors, cursor, model.backbone.input.channels);

    model.num_classes = h.at("num_classes").get<int>();
    model.class_names = h.at("class_names").get<std::vector<std::string>>();
    model.frozen = h.at("frozen").get<bool>();
    model.training_config = h.at("training_config");
    model.head.in_dim = h.at("head").at("in_dim").get<int>();
    model.head.out_dim = h.at("head").at("out_dim").get<int>();
    if (c.tensors.size() != cursor + 2) throw corrupt(path, "missing head parameters");
    model.head.weights = std::move(c.tensors[cursor]);
    model.head.bias = std::move(c.tensors[cursor + 1]);

    if (model.head.out_dim != model.num_classes || static_cast<int>(model.class_names.size()) != model.num_classes ||
        model.head.weights.size() != static_cast<std::size_t>(model.head.in_dim) * model.head.out_dim ||
        model.head.bias.size() != static_cast<std::size_t>(model.head.out_dim)) {
      throw corrupt(path, "head dimensions are inconsistent");
    }
    if (feature_width(model.extractor, model.backbone.input) != model.head.in_dim) {
      throw corrupt(path, "backbone feature width does not match head");
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw corrupt(path, std::string("malformed header: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ShapeMismatch || e.kind() == ErrorKind::BadConfig) throw corrupt(path, e.what());
    throw;
  }
}

ModelArtifact describe_artifact(const std::filesystem::path& path) {
  const ClassifierModel model = load_model(path);
  ModelArtifact artifact;
  artifact.path = path;
  artifact.backbone_id = model.backbone.id;
  artifact.class_names = model.class_names;
  artifact.training_config = model.training_config;
  artifact.byte_size = std::filesystem::file_size(path);
  return artifact;
}

}  // namespace skinbench
