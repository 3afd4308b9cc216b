#pragma once

// Single-file container shared by model artifacts and cached backbone weights:
//
//   bytes 0..3   magic ("SKBM" model, "SKBW" backbone weights)
//   byte  4      format version
//   bytes 5..12  header length, uint64 little-endian
//   header       UTF-8 JSON; lists "param_sizes" and "payload_fnv1a"
//   payload      float32 little-endian, concatenated in param_sizes order

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace skinbench {

using Magic = std::array<char, 4>;

inline constexpr Magic kModelMagic{'S', 'K', 'B', 'M'};
inline constexpr Magic kWeightsMagic{'S', 'K', 'B', 'W'};
inline constexpr std::uint8_t kContainerVersion = 1;

struct Container {
  nlohmann::json header;
  std::vector<std::vector<float>> tensors;
};

/// Throws IoError when the file cannot be written.
void write_container(const std::filesystem::path& path, const Magic& magic, const Container& container);

/// Throws IoError for unreadable files and CorruptArtifact for anything malformed.
Container read_container(const std::filesystem::path& path, const Magic& magic);

}  // namespace skinbench
