#pragma once

#include <filesystem>

#include "skinbench/tensor.hpp"

namespace skinbench {

/// Decodes a JPEG or PNG file into 8-bit RGB. Grayscale is replicated to three
/// channels and alpha is dropped. Throws Error{DecodeError} carrying the path.
ImageBuffer load_image(const std::filesystem::path& path);

void write_jpeg(const std::filesystem::path& path, const ImageBuffer& image, int quality = 95);
void write_jpeg_grayscale(const std::filesystem::path& path, int height, int width, std::uint8_t value,
                          int quality = 95);
void write_png(const std::filesystem::path& path, const ImageBuffer& image);

}  // namespace skinbench
