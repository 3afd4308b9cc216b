#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "skinbench/image_io.hpp"
#include "skinbench/report.hpp"
#include "support.hpp"

using testsupport::TempDir;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string output;  // stdout and stderr interleaved
};

RunResult run(const std::string& args) {
  const std::string cmd = testsupport::cli_path().string() + " " + args + " 2>&1";
  RunResult r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof(buf), pipe)) > 0) r.output.append(buf, n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

// One trained model shared by the predict tests.
class TrainedFixture : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("cli");
    testsupport::make_color_dataset(dir_->path() / "data", 12, 24, 6.0);
    const auto r = run("train --root " + q(dir_->path() / "data") + " --out " + q(dir_->path() / "out") +
                       " --backbone MobileNet --random-init --epochs 5 --lr 0.01 --batch-size 8 --seed 3");
    ASSERT_EQ(r.code, 0) << r.output;
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }
  static fs::path model() { return dir_->path() / "out/models/MobileNet.sbm"; }
  static TempDir* dir_;
};

TempDir* TrainedFixture::dir_ = nullptr;

}  // namespace

TEST(Cli, ScanPrintsCountsAndJson) {
  TempDir dir;
  testsupport::make_color_dataset(dir / "data", 2, 8);
  auto r = run("scan --root " + q(dir / "data") + " --out " + q(dir / "out"));
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("magenta"), std::string::npos);
  EXPECT_NE(r.output.find("total: 14"), std::string::npos);
  r = run("scan --json --root " + q(dir / "data") + " --out " + q(dir / "out"));
  ASSERT_EQ(r.code, 0) << r.output;
  const auto doc = nlohmann::json::parse(r.output);
  EXPECT_EQ(doc.at("num_samples"), 14);
  EXPECT_EQ(doc.at("counts_per_class").at("red"), 2);
  EXPECT_TRUE(fs::exists(dir / "out/manifest.json"));
}

TEST(Cli, MissingRootExitsTwo) {
  TempDir dir;
  const auto r = run("scan --root " + q(dir / "missing") + " --out " + q(dir / "out"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("MissingRoot"), std::string::npos);
}

TEST(Cli, UnknownBackboneExitsTwo) {
  TempDir dir;
  testsupport::make_color_dataset(dir / "data", 3, 8);
  const auto r = run("train --root " + q(dir / "data") + " --out " + q(dir / "out") + " --backbone AlexNet");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("UnknownBackbone"), std::string::npos);
}

TEST(Cli, BadConfigFieldExitsTwo) {
  TempDir dir;
  testsupport::write_bytes(dir / "c.json", R"({"dataset_root": "x", "momentum": 0.9})");
  const auto r = run("scan --config " + q(dir / "c.json"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("BadConfig"), std::string::npos);
}

TEST(Cli, SplitIsIdempotent) {
  TempDir dir;
  testsupport::make_color_dataset(dir / "data", 5, 8);
  const std::string args = "split --root " + q(dir / "data") + " --out " + q(dir / "out") + " --seed 11";
  ASSERT_EQ(run(args).code, 0);
  const auto first = slurp(dir / "out/split.json");
  ASSERT_EQ(run(args).code, 0);
  EXPECT_EQ(first, slurp(dir / "out/split.json"));
  EXPECT_EQ(run(args + " --ratios 0.5 0.5 0.5").code, 2);
}

TEST(Cli, TrainTwiceGivesIdenticalHistories) {
  TempDir dir;
  testsupport::make_color_dataset(dir / "data", 8, 16);
  const std::string common = "train --root " + q(dir / "data") +
                             " --backbone MobileNet --random-init --epochs 5 --lr 0.01 --batch-size 8 --seed 9";
  const auto a = run(common + " --out " + q(dir / "a"));
  const auto b = run(common + " --out " + q(dir / "b"));
  ASSERT_EQ(a.code, 0) << a.output;
  ASSERT_EQ(b.code, 0) << b.output;
  EXPECT_TRUE(fs::exists(dir / "a/models/MobileNet.sbm"));
  const auto history = nlohmann::json::parse(slurp(dir / "a/history_MobileNet.json"));
  EXPECT_EQ(history.at("records").size(), 5u);
  EXPECT_EQ(slurp(dir / "a/history_MobileNet.json"), slurp(dir / "b/history_MobileNet.json"));
  EXPECT_EQ(slurp(dir / "a/train_MobileNet.log"), slurp(dir / "b/train_MobileNet.log"));
  EXPECT_EQ(slurp(dir / "a/models/MobileNet.sbm"), slurp(dir / "b/models/MobileNet.sbm"));
}

TEST(Cli, BenchTwoBackbonesAndEmptyList) {
  TempDir dir;
  testsupport::make_color_dataset(dir / "data", 8, 16);
  const auto r = run("bench --root " + q(dir / "data") + " --out " + q(dir / "out") +
                     " --backbones MobileNet 'NASNet Mobile' --random-init --epochs 2 --lr 0.01 --batch-size 8"
                     " --load-reps 3 --parallel 2");
  ASSERT_EQ(r.code, 0) << r.output;
  const auto rows = skinbench::parse_comparison_csv(slurp(dir / "out/comparison.csv"));
  EXPECT_EQ(rows.size(), 2u);
  EXPECT_TRUE(fs::exists(dir / "out/cm_NASNet_Mobile.png"));
  const auto summary = nlohmann::json::parse(slurp(dir / "out/summary.json"));
  EXPECT_EQ(summary.at("provenance").at("dataset_checksum").get<std::string>().size(), 64u);

  const auto re = run("report --summary " + q(dir / "out/summary.json") + " --sort name --out " + q(dir / "re"));
  EXPECT_EQ(re.code, 0) << re.output;
  EXPECT_EQ(skinbench::parse_comparison_csv(slurp(dir / "re/comparison.csv")).front().model, "MobileNet");

  testsupport::write_bytes(dir / "empty.json",
                           R"({"dataset_root": ")" + (dir / "data").string() + R"(", "backbones": []})");
  const auto e = run("bench --config " + q(dir / "empty.json") + " --out " + q(dir / "e"));
  EXPECT_EQ(e.code, 2);
  EXPECT_NE(e.output.find("EmptyInput"), std::string::npos);
}

TEST_F(TrainedFixture, SolidRedIsClassifiedRed) {
  skinbench::ImageBuffer red(50, 50);
  for (int y = 0; y < 50; ++y)
    for (int x = 0; x < 50; ++x) {
      red.at(y, x, 0) = 215;
      red.at(y, x, 1) = 35;
      red.at(y, x, 2) = 35;
    }
  skinbench::write_jpeg(dir_->path() / "red.jpg", red);

  // The mean-colour oracle agrees on what "red" means for this fixture.
  const auto manifest = skinbench::scan_dataset(dir_->path() / "data");
  testsupport::MeanColorLogistic oracle;
  oracle.fit(manifest.samples, 7);
  EXPECT_EQ(manifest.class_names[oracle.predict(dir_->path() / "red.jpg")], "red");

  const auto r = run("predict --model " + q(model()) + " --image " + q(dir_->path() / "red.jpg") + " --top-k 1");
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_EQ(r.output.rfind("1\tred\t", 0), 0u) << r.output;
}

TEST_F(TrainedFixture, TopKContract) {
  const fs::path img = dir_->path() / "data/blue/img_000.jpg";
  auto r = run("predict --model " + q(model()) + " --image " + q(img) + " --top-k 0");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("BadConfig"), std::string::npos);
  r = run("predict --model " + q(model()) + " --image " + q(img) + " --top-k 8");
  EXPECT_EQ(r.code, 2);
  r = run("predict --model " + q(model()) + " --image " + q(img) + " --top-k 7");
  ASSERT_EQ(r.code, 0) << r.output;
  std::istringstream in(r.output);
  std::string line;
  double sum = 0;
  int lines = 0;
  while (std::getline(in, line)) {
    sum += std::stod(line.substr(line.rfind('\t') + 1));
    ++lines;
  }
  EXPECT_EQ(lines, 7);
  EXPECT_NEAR(sum, 1.0, 1e-6);
}

TEST_F(TrainedFixture, CorruptModelExitsTwo) {
  testsupport::write_bytes(dir_->path() / "bad.sbm", "SKBM garbage");
  const auto r = run("predict --model " + q(dir_->path() / "bad.sbm") + " --image " +
                     q(dir_->path() / "data/blue/img_000.jpg"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("CorruptArtifact"), std::string::npos);
}
