#include "skinbench/error.hpp"

namespace skinbench {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MissingRoot: return "MissingRoot";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::BadRatios: return "BadRatios";
    case ErrorKind::EmptyClass: return "EmptyClass";
    case ErrorKind::DecodeError: return "DecodeError";
    case ErrorKind::UnknownBackbone: return "UnknownBackbone";
    case ErrorKind::EmptyImage: return "EmptyImage";
    case ErrorKind::WeightsUnavailable: return "WeightsUnavailable";
    case ErrorKind::BadClassCount: return "BadClassCount";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::CorruptArtifact: return "CorruptArtifact";
    case ErrorKind::BadConfig: return "BadConfig";
    case ErrorKind::EmptySplit: return "EmptySplit";
    case ErrorKind::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorKind::TrainingError: return "TrainingError";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::EmptyMatrix: return "EmptyMatrix";
    case ErrorKind::ClassMismatch: return "ClassMismatch";
    case ErrorKind::DuplicateModel: return "DuplicateModel";
    case ErrorKind::EmptyInput: return "EmptyInput";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

Error& Error::with_path(std::string path) {
  path_ = std::move(path);
  return *this;
}

Error& Error::with_index(std::size_t index) {
  index_ = index;
  return *this;
}

Error& Error::with_epoch(int epoch) {
  epoch_ = epoch;
  return *this;
}

}  // namespace skinbench
