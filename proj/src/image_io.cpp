#include "skinbench/image_io.hpp"

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "skinbench/error.hpp"

namespace skinbench {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f != nullptr) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* mgr = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, mgr->message);
  std::longjmp(mgr->jump, 1);
}

// Warnings such as premature end of data would otherwise yield a gray-filled image.
void jpeg_emit_message(j_common_ptr cinfo, int level) {
  if (level < 0) jpeg_error_exit(cinfo);
}

Error decode_error(const std::filesystem::path& path, const std::string& why) {
  Error e(ErrorKind::DecodeError, path.string() + ": " + why);
  e.with_path(path.string());
  return e;
}

bool has_png_signature(std::FILE* f) {
  unsigned char sig[8] = {};
  const std::size_t got = std::fread(sig, 1, sizeof(sig), f);
  std::rewind(f);
  return got == sizeof(sig) && png_sig_cmp(sig, 0, sizeof(sig)) == 0;
}

// Returns an empty string on success, otherwise the decoder's message. Kept free of
// C++ objects with destructors between setjmp and longjmp.
std::string decode_jpeg(std::FILE* f, ImageBuffer& out, std::vector<std::uint8_t>& row) {
  jpeg_decompress_struct cinfo;
  JpegErrorManager err;
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  err.base.emit_message = jpeg_emit_message;
  err.message[0] = '\0';
  if (setjmp(err.jump) != 0) {
    jpeg_destroy_decompress(&cinfo);
    return err.message[0] != '\0' ? std::string(err.message) : std::string("corrupt JPEG data");
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, f);
  jpeg_read_header(&cinfo, TRUE);
  if (cinfo.jpeg_color_space == JCS_CMYK || cinfo.jpeg_color_space == JCS_YCCK) {
    jpeg_destroy_decompress(&cinfo);
    return "CMYK JPEG is not supported";
  }
  cinfo.out_color_space = cinfo.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&cinfo);
  const int h = static_cast<int>(cinfo.output_height);
  const int w = static_cast<int>(cinfo.output_width);
  const int comps = cinfo.output_components;
  out = ImageBuffer(h, w);
  row.resize(static_cast<std::size_t>(w) * comps);
  while (cinfo.output_scanline < cinfo.output_height) {
    const int y = static_cast<int>(cinfo.output_scanline);
    JSAMPROW ptr = row.data();
    jpeg_read_scanlines(&cinfo, &ptr, 1);
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = comps == 1 ? row[x] : row[x * comps + c];
    }
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return {};
}

ImageBuffer decode_png(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_file(&image, path.c_str()) == 0) {
    throw decode_error(path, image.message);
  }
  image.format = PNG_FORMAT_RGB;
  ImageBuffer out(static_cast<int>(image.height), static_cast<int>(image.width));
  if (png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr) == 0) {
    std::string why = image.message;
    png_image_free(&image);
    throw decode_error(path, why);
  }
  return out;
}

}  // namespace

ImageBuffer load_image(const std::filesystem::path& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw decode_error(path, "cannot open file");
  if (has_png_signature(f.get())) {
    f.reset();
    return decode_png(path);
  }
  ImageBuffer out;
  std::vector<std::uint8_t> scratch;
  const std::string why = decode_jpeg(f.get(), out, scratch);
  if (!why.empty()) throw decode_error(path, why);
  if (out.empty()) throw decode_error(path, "image has no pixels");
  return out;
}

namespace {

void encode_jpeg(const std::filesystem::path& path, const std::uint8_t* pixels, int height, int width,
                 int components, int quality) {
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) {
    Error e(ErrorKind::IoError, "cannot write " + path.string());
    throw e.with_path(path.string());
  }
  jpeg_compress_struct cinfo;
  jpeg_error_mgr jerr;
  cinfo.err = jpeg_std_error(&jerr);
  jpeg_create_compress(&cinfo);
  jpeg_stdio_dest(&cinfo, f.get());
  cinfo.image_width = static_cast<JDIMENSION>(width);
  cinfo.image_height = static_cast<JDIMENSION>(height);
  cinfo.input_components = components;
  cinfo.in_color_space = components == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  while (cinfo.next_scanline < cinfo.image_height) {
    auto* row = const_cast<JSAMPROW>(pixels + static_cast<std::size_t>(cinfo.next_scanline) * width * components);
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
}

}  // namespace

void write_jpeg(const std::filesystem::path& path, const ImageBuffer& image, int quality) {
  encode_jpeg(path, image.pixels.data(), image.height, image.width, 3, quality);
}

void write_jpeg_grayscale(const std::filesystem::path& path, int height, int width, std::uint8_t value,
                          int quality) {
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(height) * width, value);
  encode_jpeg(path, pixels.data(), height, width, 1, quality);
}

void write_png(const std::filesystem::path& path, const ImageBuffer& image) {
  png_image out;
  std::memset(&out, 0, sizeof(out));
  out.version = PNG_IMAGE_VERSION;
  out.width = static_cast<png_uint_32>(image.width);
  out.height = static_cast<png_uint_32>(image.height);
  out.format = PNG_FORMAT_RGB;
  if (png_image_write_to_file(&out, path.c_str(), 0, image.pixels.data(), 0, nullptr) == 0) {
    Error e(ErrorKind::IoError, "cannot write " + path.string() + ": " + out.message);
    throw e.with_path(path.string());
  }
}

}  // namespace skinbench
