#include "skinbench/report.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "skinbench/error.hpp"
#include "skinbench/image_io.hpp"
#include "skinbench/model_zoo.hpp"

namespace fs = std::filesystem;

namespace skinbench {

std::string_view to_string(SortKey key) {
  switch (key) {
    case SortKey::AccuracyDesc: return "accuracy";
    case SortKey::WeightAsc: return "weight";
    case SortKey::LoadTimeAsc: return "load_time";
    case SortKey::Name: return "name";
  }
  return "accuracy";
}

SortKey sort_key_from_string(std::string_view text) {
  for (auto key : {SortKey::AccuracyDesc, SortKey::WeightAsc, SortKey::LoadTimeAsc, SortKey::Name}) {
    if (to_string(key) == text) return key;
  }
  throw Error(ErrorKind::BadConfig, "unknown sort key '" + std::string(text) + "'");
}

namespace {

bool ordered_before(const BenchmarkRecord& a, const BenchmarkRecord& b, SortKey key) {
  switch (key) {
    case SortKey::AccuracyDesc:
      if (a.accuracy_pct != b.accuracy_pct) return a.accuracy_pct > b.accuracy_pct;
      break;
    case SortKey::WeightAsc:
      if (a.weight_size_mb != b.weight_size_mb) return a.weight_size_mb < b.weight_size_mb;
      break;
    case SortKey::LoadTimeAsc:
      if (a.loading_time_s != b.loading_time_s) return a.loading_time_s < b.loading_time_s;
      break;
    case SortKey::Name:
      break;
  }
  return a.model_id < b.model_id;
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  return fields;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  out.close();
  if (!out) {
    Error e(ErrorKind::IoError, "cannot write " + path.string());
    throw e.with_path(path.string());
  }
}

// 3x5 bitmap digits, one row per entry, MSB = leftmost pixel.
constexpr std::array<std::array<std::uint8_t, 5>, 10> kDigits = {{
    {7, 5, 5, 5, 7}, {2, 6, 2, 2, 7}, {7, 1, 7, 4, 7}, {7, 1, 7, 1, 7}, {5, 5, 7, 1, 1},
    {7, 4, 7, 1, 7}, {7, 4, 7, 5, 7}, {7, 1, 1, 1, 1}, {7, 5, 7, 5, 7}, {7, 5, 7, 1, 7},
}};

void fill_rect(ImageBuffer& img, int y0, int x0, int h, int w, std::array<std::uint8_t, 3> rgb) {
  for (int y = std::max(0, y0); y < std::min(img.height, y0 + h); ++y)
    for (int x = std::max(0, x0); x < std::min(img.width, x0 + w); ++x)
      for (int c = 0; c < 3; ++c) img.at(y, x, c) = rgb[c];
}

void draw_number(ImageBuffer& img, long long value, int cy, int cx, int scale, std::array<std::uint8_t, 3> rgb) {
  const std::string text = std::to_string(value);
  const int glyph_w = 4 * scale;
  const int width = static_cast<int>(text.size()) * glyph_w - scale;
  int x = cx - width / 2;
  const int y = cy - (5 * scale) / 2;
  for (char ch : text) {
    const auto& glyph = kDigits[static_cast<std::size_t>(ch - '0')];
    for (int r = 0; r < 5; ++r)
      for (int col = 0; col < 3; ++col)
        if (glyph[r] & (4 >> col)) fill_rect(img, y + r * scale, x + col * scale, scale, scale, rgb);
    x += glyph_w;
  }
}

}  // namespace

ComparisonTable build_table(std::vector<BenchmarkRecord> records, SortKey key) {
  if (records.empty()) throw Error(ErrorKind::EmptyInput, "no benchmark records");
  std::set<std::string> seen;
  for (const auto& r : records) {
    if (!seen.insert(r.model_id).second) throw Error(ErrorKind::DuplicateModel, "duplicate model '" + r.model_id + "'");
  }
  ComparisonTable table;
  table.sort_key = key;
  table.best_model =
      std::min_element(records.begin(), records.end(), [](const BenchmarkRecord& a, const BenchmarkRecord& b) {
        return ordered_before(a, b, SortKey::AccuracyDesc);
      })->model_id;
  std::sort(records.begin(), records.end(),
            [key](const BenchmarkRecord& a, const BenchmarkRecord& b) { return ordered_before(a, b, key); });
  table.rows = std::move(records);
  return table;
}

std::string format_fixed3(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", value);
  return buf;
}

std::string comparison_csv(const ComparisonTable& table) {
  std::string out = std::string(kComparisonHeader) + "\n";
  for (const auto& r : table.rows) {
    out += csv_field(r.model_id) + "," + format_fixed3(r.weight_size_mb) + "," + format_fixed3(r.loading_time_s) +
           "," + format_fixed3(r.accuracy_pct) + "\n";
  }
  return out;
}

std::string comparison_text(const ComparisonTable& table) {
  std::size_t name_w = 5;
  for (const auto& r : table.rows) name_w = std::max(name_w, r.model_id.size());
  char line[256];
  std::ostringstream out;
  std::snprintf(line, sizeof(line), "%-*s  %16s  %22s  %18s\n", static_cast<int>(name_w), "Model", "Weight size (MB)",
                "Loading time (seconds)", "Accuracy (Percent)");
  out << line;
  out << std::string(name_w + 2 + 16 + 2 + 22 + 2 + 18, '-') << '\n';
  for (const auto& r : table.rows) {
    std::snprintf(line, sizeof(line), "%-*s  %16.3f  %22.3f  %18.2f\n", static_cast<int>(name_w),
                  r.model_id.c_str(), r.weight_size_mb, r.loading_time_s, r.accuracy_pct);
    out << line;
  }
  out << "\nBest model by accuracy: " << table.best_model << '\n';
  return out.str();
}

std::string confusion_csv(const ConfusionMatrix& cm) {
  auto name = [&](int i) {
    return static_cast<std::size_t>(i) < cm.class_names().size() ? cm.class_names()[i] : std::to_string(i);
  };
  std::string out = "# rows = predicted class, columns = actual class\n";
  out += "predicted\\actual";
  for (int a = 0; a < cm.size(); ++a) out += "," + csv_field(name(a));
  out += "\n";
  for (int p = 0; p < cm.size(); ++p) {
    out += csv_field(name(p));
    for (int a = 0; a < cm.size(); ++a) out += "," + std::to_string(cm.at(p, a));
    out += "\n";
  }
  return out;
}

std::vector<ComparisonRow> parse_comparison_csv(std::string_view text) {
  std::vector<ComparisonRow> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kComparisonHeader) {
    throw Error(ErrorKind::BadConfig, "comparison CSV header does not match");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 4) throw Error(ErrorKind::BadConfig, "comparison CSV row needs 4 fields: " + line);
    try {
      rows.push_back({fields[0], std::stod(fields[1]), std::stod(fields[2]), std::stod(fields[3])});
    } catch (const std::exception&) {
      throw Error(ErrorKind::BadConfig, "non-numeric field in comparison CSV: " + line);
    }
  }
  return rows;
}

ImageBuffer render_confusion_heatmap(const ConfusionMatrix& cm) {
  constexpr int kCell = 48;
  constexpr int kMargin = 32;
  const int k = std::max(cm.size(), 1);
  ImageBuffer img(kMargin + k * kCell + 8, kMargin + k * kCell + 8);
  std::fill(img.pixels.begin(), img.pixels.end(), std::uint8_t{255});

  std::int64_t peak = 0;
  for (auto v : cm.counts()) peak = std::max(peak, v);
  for (int p = 0; p < cm.size(); ++p) {
    // Row labels: predicted class index; column labels: actual class index.
    draw_number(img, p, kMargin + p * kCell + kCell / 2, kMargin / 2, 3, {0, 0, 0});
    draw_number(img, p, kMargin / 2, kMargin + p * kCell + kCell / 2, 3, {0, 0, 0});
    for (int a = 0; a < cm.size(); ++a) {
      const double t = peak > 0 ? static_cast<double>(cm.at(p, a)) / static_cast<double>(peak) : 0.0;
      const std::array<std::uint8_t, 3> rgb = {static_cast<std::uint8_t>(247 - t * (247 - 8)),
                                               static_cast<std::uint8_t>(251 - t * (251 - 48)),
                                               static_cast<std::uint8_t>(255 - t * (255 - 107))};
      fill_rect(img, kMargin + p * kCell, kMargin + a * kCell, kCell - 1, kCell - 1, rgb);
      const std::array<std::uint8_t, 3> ink =
          t > 0.5 ? std::array<std::uint8_t, 3>{255, 255, 255} : std::array<std::uint8_t, 3>{0, 0, 0};
      draw_number(img, cm.at(p, a), kMargin + p * kCell + kCell / 2, kMargin + a * kCell + kCell / 2, 2, ink);
    }
  }
  return img;
}

ReportFiles emit_report(const ComparisonTable& table, const fs::path& out_dir, const nlohmann::json& provenance) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (!fs::is_directory(out_dir, ec)) {
    Error e(ErrorKind::IoError, "cannot create output directory " + out_dir.string());
    throw e.with_path(out_dir.string());
  }

  ReportFiles files;
  files.comparison_csv = out_dir / "comparison.csv";
  files.comparison_txt = out_dir / "comparison.txt";
  files.summary_json = out_dir / "summary.json";
  write_text(files.comparison_csv, comparison_csv(table));
  write_text(files.comparison_txt, comparison_text(table));

  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : table.rows) {
    records.push_back(to_json(r));
    const std::string stem = "cm_" + sanitize_id(r.model_id);
    files.confusion_csvs.push_back(out_dir / (stem + ".csv"));
    write_text(files.confusion_csvs.back(), confusion_csv(r.confusion));
    files.confusion_pngs.push_back(out_dir / (stem + ".png"));
    write_png(files.confusion_pngs.back(), render_confusion_heatmap(r.confusion));
  }

  nlohmann::json summary;
  summary["best_model"] = table.best_model;
  summary["sort_key"] = to_string(table.sort_key);
  summary["units"] = {{"weight_size", "MiB (bytes / 2^20)"}, {"loading_time", "seconds, median of post-warm-up loads"},
                      {"accuracy", "top-1 percent"}};
  summary["provenance"] = provenance;
  summary["records"] = records;
  write_text(files.summary_json, summary.dump(2) + "\n");
  return files;
}

std::vector<BenchmarkRecord> records_from_summary(const nlohmann::json& summary) {
  try {
    std::vector<BenchmarkRecord> records;
    for (const auto& doc : summary.at("records")) records.push_back(benchmark_record_from_json(doc));
    return records;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::BadConfig, std::string("malformed summary: ") + e.what());
  }
}

}  // namespace skinbench
