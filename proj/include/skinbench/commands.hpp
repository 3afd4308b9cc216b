#pragma once

// Pipeline commands behind the `skinbench` executable. Each returns a process
// exit code: 0 success, 2 usage or input error, 3 runtime or training error.

#include <filesystem>
#include <iosfwd>
#include <string>

#include "skinbench/config.hpp"
#include "skinbench/error.hpp"

namespace skinbench {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitRuntime = 3;

int exit_code_for(ErrorKind kind);

int cmd_scan(const RunConfig& config, bool as_json, std::ostream& out, std::ostream& err);
int cmd_split(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_train(const RunConfig& config, const std::string& backbone_id, std::ostream& out, std::ostream& err);
int cmd_bench(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_predict(const RunConfig& config, const std::filesystem::path& model_path,
                const std::filesystem::path& image_path, int top_k, std::ostream& out, std::ostream& err);
int cmd_report(const std::filesystem::path& summary_path, const std::string& sort_key,
               const std::filesystem::path& out_dir, std::ostream& out, std::ostream& err);

}  // namespace skinbench
