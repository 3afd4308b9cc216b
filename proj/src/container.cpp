#include "skinbench/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "skinbench/error.hpp"

namespace skinbench {

static_assert(std::endian::native == std::endian::little, "container payload is little-endian");

namespace {

std::string fnv_hex(const std::vector<std::vector<float>>& tensors) {
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& t : tensors) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(t.data());
    for (std::size_t i = 0; i < t.size() * sizeof(float); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Error corrupt(const std::filesystem::path& path, const std::string& why) {
  Error e(ErrorKind::CorruptArtifact, path.string() + ": " + why);
  e.with_path(path.string());
  return e;
}

}  // namespace

void write_container(const std::filesystem::path& path, const Magic& magic, const Container& container) {
  nlohmann::json header = container.header;
  std::vector<std::size_t> sizes;
  for (const auto& t : container.tensors) sizes.push_back(t.size());
  header["param_sizes"] = sizes;
  header["payload_fnv1a"] = fnv_hex(container.tensors);
  const std::string text = header.dump();
  const std::uint64_t header_len = text.size();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    Error e(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
    throw e.with_path(path.string());
  }
  out.write(magic.data(), magic.size());
  out.put(static_cast<char>(kContainerVersion));
  out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& t : container.tensors) {
    out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(float)));
  }
  out.close();
  if (!out) {
    Error e(ErrorKind::IoError, "failed writing " + path.string());
    throw e.with_path(path.string());
  }
}

Container read_container(const std::filesystem::path& path, const Magic& magic) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  std::error_code ec;
  if (!in || std::filesystem::is_directory(path, ec)) {
    Error e(ErrorKind::IoError, "cannot open " + path.string());
    throw e.with_path(path.string());
  }
  const auto file_size = static_cast<std::uint64_t>(in.tellg());
  in.seekg(0);

  constexpr std::uint64_t kPreamble = 4 + 1 + 8;
  if (file_size < kPreamble) throw corrupt(path, "file too short");
  Magic got{};
  in.read(got.data(), got.size());
  if (got != magic) throw corrupt(path, "bad magic header");
  const int version = in.get();
  if (version != kContainerVersion) throw corrupt(path, "unsupported version " + std::to_string(version));
  std::uint64_t header_len = 0;
  in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
  if (header_len > file_size - kPreamble) throw corrupt(path, "header length exceeds file");

  std::string text(header_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_len));

  Container container;
  std::vector<std::size_t> sizes;
  std::string expected_hash;
  try {
    container.header = nlohmann::json::parse(text);
    sizes = container.header.at("param_sizes").get<std::vector<std::size_t>>();
    expected_hash = container.header.at("payload_fnv1a").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw corrupt(path, std::string("malformed header: ") + e.what());
  }

  std::uint64_t floats = 0;
  for (std::size_t s : sizes) floats += s;
  if (floats * sizeof(float) != file_size - kPreamble - header_len) throw corrupt(path, "payload size mismatch");

  container.tensors.reserve(sizes.size());
  for (std::size_t s : sizes) {
    auto& t = container.tensors.emplace_back(s);
    in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(s * sizeof(float)));
  }
  if (!in) throw corrupt(path, "truncated payload");
  if (fnv_hex(container.tensors) != expected_hash) throw corrupt(path, "payload checksum mismatch");
  return container;
}

}  // namespace skinbench
