// skinbench command-line entry point.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "skinbench/commands.hpp"
#include "skinbench/config.hpp"

namespace {

using skinbench::RunConfig;

struct Overrides {
  std::string config_path;
  std::string root;
  std::string out;
  std::vector<double> ratios;
  std::uint64_t seed = 0;
  std::vector<std::string> backbones;
  double lr = 0;
  int epochs = 0;
  int batch_size = 0;
  bool unfreeze = false;
  bool random_init = false;
  bool accept_png = false;
  std::string weights_dir;
  std::string split_file;
  int parallel = 0;
  int load_reps = 0;
};

struct Flags {
  CLI::Option* root = nullptr;
  CLI::Option* out = nullptr;
  CLI::Option* ratios = nullptr;
  CLI::Option* seed = nullptr;
  CLI::Option* backbones = nullptr;
  CLI::Option* lr = nullptr;
  CLI::Option* epochs = nullptr;
  CLI::Option* batch_size = nullptr;
  CLI::Option* weights_dir = nullptr;
  CLI::Option* split_file = nullptr;
  CLI::Option* parallel = nullptr;
  CLI::Option* load_reps = nullptr;
};

void add_data_flags(CLI::App* cmd, Overrides& o, Flags& f) {
  cmd->add_option("--config", o.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  f.root = cmd->add_option("--root", o.root, "dataset root (one sub-directory per class)");
  f.out = cmd->add_option("--out", o.out, "output directory");
  cmd->add_flag("--accept-png", o.accept_png, "also accept .png images");
}

void add_split_flags(CLI::App* cmd, Overrides& o, Flags& f) {
  f.seed = cmd->add_option("--seed", o.seed, "seed for split, head init and batch order");
  f.ratios = cmd->add_option("--ratios", o.ratios, "train val test fractions")->expected(3);
  f.split_file = cmd->add_option("--split-file", o.split_file, "reuse a saved split.json");
}

void add_train_flags(CLI::App* cmd, Overrides& o, Flags& f) {
  f.lr = cmd->add_option("--lr", o.lr, "Adam learning rate");
  f.epochs = cmd->add_option("--epochs", o.epochs, "training epochs");
  f.batch_size = cmd->add_option("--batch-size", o.batch_size, "mini-batch size");
  cmd->add_flag("--unfreeze", o.unfreeze, "train backbone weights as well as the head");
  cmd->add_flag("--random-init", o.random_init, "use seeded random backbones instead of cached weights");
  f.weights_dir = cmd->add_option("--weights-dir", o.weights_dir, "directory holding exported backbone weights");
}

RunConfig resolve(const Overrides& o, const Flags& f) {
  RunConfig c = o.config_path.empty() ? skinbench::default_run_config() : skinbench::load_run_config(o.config_path);
  if (f.root && f.root->count()) c.dataset_root = o.root;
  if (f.out && f.out->count()) c.output_dir = o.out;
  if (f.ratios && f.ratios->count()) c.ratios = {o.ratios[0], o.ratios[1], o.ratios[2]};
  if (f.seed && f.seed->count()) c.seed = o.seed;
  if (f.backbones && f.backbones->count()) c.backbones = o.backbones;
  if (f.lr && f.lr->count()) c.train.learning_rate = o.lr;
  if (f.epochs && f.epochs->count()) c.train.epochs = o.epochs;
  if (f.batch_size && f.batch_size->count()) c.train.batch_size = o.batch_size;
  if (f.weights_dir && f.weights_dir->count()) c.weights_dir = o.weights_dir;
  if (f.split_file && f.split_file->count()) c.split_file = o.split_file;
  if (f.parallel && f.parallel->count()) c.parallel = o.parallel;
  if (f.load_reps && f.load_reps->count()) c.load_repetitions = o.load_reps;
  if (o.unfreeze) c.freeze = false;
  if (o.random_init) c.random_init = true;
  if (o.accept_png) c.accept_png = true;
  c.train.seed = c.seed;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Train and benchmark pretrained image classifiers on a skin-lesion dataset"};
  app.require_subcommand(1);

  Overrides o;
  Flags scan_flags, split_flags, train_flags, bench_flags;
  bool as_json = false;
  std::string backbone;
  std::string model_path;
  std::string image_path;
  int top_k = 3;
  std::string summary_path;
  std::string sort_key = "accuracy";
  std::string report_out = ".";

  auto* scan = app.add_subcommand("scan", "list classes and image counts");
  add_data_flags(scan, o, scan_flags);
  scan->add_flag("--json", as_json, "print the summary as JSON");

  auto* split = app.add_subcommand("split", "write a stratified train/val/test split");
  add_data_flags(split, o, split_flags);
  add_split_flags(split, o, split_flags);

  auto* train = app.add_subcommand("train", "fine-tune one backbone");
  add_data_flags(train, o, train_flags);
  add_split_flags(train, o, train_flags);
  add_train_flags(train, o, train_flags);
  train->add_option("--backbone", backbone, "registered backbone id")->required();

  auto* bench = app.add_subcommand("bench", "train, evaluate and compare backbones");
  add_data_flags(bench, o, bench_flags);
  add_split_flags(bench, o, bench_flags);
  add_train_flags(bench, o, bench_flags);
  bench_flags.backbones = bench->add_option("--backbones", o.backbones, "backbone ids (default: all)");
  bench_flags.parallel = bench->add_option("--parallel", o.parallel, "models trained concurrently");
  bench_flags.load_reps = bench->add_option("--load-reps", o.load_reps, "timed loads per model (median reported)");

  auto* predict = app.add_subcommand("predict", "classify one image with a saved model");
  predict->add_option("--model", model_path, "saved .sbm model")->required();
  predict->add_option("--image", image_path, "JPEG or PNG image")->required();
  predict->add_option("--top-k", top_k, "number of classes to print");

  auto* report = app.add_subcommand("report", "re-emit comparison files from summary.json");
  report->add_option("--summary", summary_path, "summary.json from a bench run")->required();
  report->add_option("--sort", sort_key, "accuracy, weight, load_time or name");
  report->add_option("--out", report_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? skinbench::kExitOk : skinbench::kExitInput;
  }

  if (*predict) {
    return skinbench::cmd_predict(RunConfig{}, model_path, image_path, top_k, std::cout, std::cerr);
  }
  if (*report) return skinbench::cmd_report(summary_path, sort_key, report_out, std::cout, std::cerr);

  RunConfig config;
  try {
    const Flags& f = *scan ? scan_flags : *split ? split_flags : *train ? train_flags : bench_flags;
    config = resolve(o, f);
  } catch (const skinbench::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return skinbench::exit_code_for(e.kind());
  }
  if (*scan) return skinbench::cmd_scan(config, as_json, std::cout, std::cerr);
  if (*split) return skinbench::cmd_split(config, std::cout, std::cerr);
  if (*train) return skinbench::cmd_train(config, backbone, std::cout, std::cerr);
  return skinbench::cmd_bench(config, std::cout, std::cerr);
}
