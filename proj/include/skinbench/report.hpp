#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "skinbench/evaluation.hpp"

namespace skinbench {

enum class SortKey { AccuracyDesc, WeightAsc, LoadTimeAsc, Name };

std::string_view to_string(SortKey key);
SortKey sort_key_from_string(std::string_view text);

struct ComparisonTable {
  std::vector<BenchmarkRecord> rows;
  SortKey sort_key = SortKey::AccuracyDesc;
  std::string best_model;  // first row under accuracy-descending order, whatever sort_key is
};

/// Throws EmptyInput, DuplicateModel. Model id is the final tiebreaker.
ComparisonTable build_table(std::vector<BenchmarkRecord> records, SortKey key = SortKey::AccuracyDesc);

inline constexpr const char* kComparisonHeader = "Model,Weight size (MB),Loading time (s),Accuracy (%)";

/// Fixed-point with three decimals, the precision of every CSV number.
std::string format_fixed3(double value);

std::string comparison_csv(const ComparisonTable& table);
std::string comparison_text(const ComparisonTable& table);
std::string confusion_csv(const ConfusionMatrix& cm);

struct ComparisonRow {
  std::string model;
  double weight_size_mb = 0.0;
  double loading_time_s = 0.0;
  double accuracy_pct = 0.0;
};

/// Parses comparison.csv text back into rows. Throws BadConfig on a malformed file.
std::vector<ComparisonRow> parse_comparison_csv(std::string_view text);

/// Raw-count heatmap with the counts drawn in each cell.
ImageBuffer render_confusion_heatmap(const ConfusionMatrix& cm);

struct ReportFiles {
  std::filesystem::path comparison_csv;
  std::filesystem::path comparison_txt;
  std::filesystem::path summary_json;
  std::vector<std::filesystem::path> confusion_csvs;
  std::vector<std::filesystem::path> confusion_pngs;
};

/// Writes comparison.csv, comparison.txt, summary.json, cm_<id>.csv and cm_<id>.png.
/// `provenance` is embedded verbatim in summary.json. Throws IoError.
ReportFiles emit_report(const ComparisonTable& table, const std::filesystem::path& out_dir,
                        const nlohmann::json& provenance = nlohmann::json::object());

/// Reads the records and provenance back from a summary.json.
std::vector<BenchmarkRecord> records_from_summary(const nlohmann::json& summary);

}  // namespace skinbench
