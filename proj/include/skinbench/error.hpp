#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace skinbench {

enum class ErrorKind {
  MissingRoot,
  EmptyDataset,
  BadRatios,
  EmptyClass,
  DecodeError,
  UnknownBackbone,
  EmptyImage,
  WeightsUnavailable,
  BadClassCount,
  IoError,
  CorruptArtifact,
  BadConfig,
  EmptySplit,
  LabelOutOfRange,
  TrainingError,
  IndexOutOfRange,
  ShapeMismatch,
  LengthMismatch,
  EmptyMatrix,
  ClassMismatch,
  DuplicateModel,
  EmptyInput,
};

std::string_view to_string(ErrorKind kind);

// Carries an optional offending path, sample index or epoch so callers can
// report which input failed without parsing the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

  const std::optional<std::string>& path() const noexcept { return path_; }
  const std::optional<std::size_t>& index() const noexcept { return index_; }
  const std::optional<int>& epoch() const noexcept { return epoch_; }

  Error& with_path(std::string path);
  Error& with_index(std::size_t index);
  Error& with_epoch(int epoch);

 private:
  ErrorKind kind_;
  std::optional<std::string> path_;
  std::optional<std::size_t> index_;
  std::optional<int> epoch_;
};

}  // namespace skinbench
