#include "mdta2g/cli.hpp"
#include "mdta2g/report.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <map>
#include <sstream>

using namespace mdta2g;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "mdta2g");
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

/// Every file under `dir` except wall-clock timing tables.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string name = e.path().filename().string();
    if (name.find("timing") != std::string::npos) continue;
    files[fs::relative(e.path(), dir).string()] = read_text_file(e.path());
  }
  return files;
}

const std::vector<std::string> kFx{"--fx-window", "8", "--fx-dim", "4", "--fx-steps", "20"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST(Cli, GenDataIsByteDeterministic) {
  test::TempDir dir("cli_gen");
  for (const char* sub : {"a", "b"}) {
    const auto r = cli({"--seed", "5", "gen-data", "--out", (dir.path / sub).string(), "--n", "3", "--frames", "20",
                        "--layout", "custom:2"});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  EXPECT_EQ(snapshot(dir.path / "a"), snapshot(dir.path / "b"));
  ASSERT_EQ(cli({"--seed", "6", "gen-data", "--out", (dir.path / "c").string(), "--n", "3", "--frames", "20",
                 "--layout", "custom:2"}).code, 0);
  EXPECT_NE(snapshot(dir.path / "a"), snapshot(dir.path / "c"));
}

TEST(Cli, BadInputExitsWithUsageCode) {
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"gen-data"}).code, 2);
  EXPECT_EQ(cli({"gen-data", "--out", "x", "--frames", "many"}).code, 2);
  EXPECT_EQ(cli({"frobnicate"}).code, 2);
  test::TempDir dir("cli_bad");
  const auto r = cli({"gen-data", "--out", dir.path.string(), "--layout", "custom:0"});
  EXPECT_NE(r.code, 0);
  EXPECT_FALSE(r.err.empty());
  EXPECT_EQ(cli({"--help"}).code, 0);
}

TEST(Cli, ConfigFileAndFlagOverride) {
  test::TempDir dir("cli_cfg");
  write_text_file(dir.path / "run.ini", "seed=9\ngen-data.n=2\ngen-data.frames=12\ngen-data.layout=custom:2\n");
  ASSERT_EQ(cli({"--config", (dir.path / "run.ini").string(), "gen-data", "--out", (dir.path / "a").string()}).code, 0);
  ASSERT_EQ(cli({"--seed", "9", "gen-data", "--out", (dir.path / "b").string(), "--n", "2", "--frames", "12",
                 "--layout", "custom:2"}).code, 0);
  EXPECT_EQ(snapshot(dir.path / "a"), snapshot(dir.path / "b"));
  ASSERT_EQ(cli({"--config", (dir.path / "run.ini").string(), "gen-data", "--out", (dir.path / "c").string(),
                 "--frames", "14"}).code, 0);
  EXPECT_NE(read_text_file(dir.path / "c" / "dataset.txt"), read_text_file(dir.path / "a" / "dataset.txt"));
}

TEST(Cli, SeedFromEnvironment) {
  test::TempDir dir("cli_env");
  ::setenv("MDTA2G_SEED", "21", 1);
  ASSERT_EQ(cli({"gen-data", "--out", (dir.path / "a").string(), "--n", "2", "--frames", "12", "--layout", "custom:2"}).code, 0);
  ::unsetenv("MDTA2G_SEED");
  ASSERT_EQ(cli({"--seed", "21", "gen-data", "--out", (dir.path / "b").string(), "--n", "2", "--frames", "12",
                 "--layout", "custom:2"}).code, 0);
  EXPECT_EQ(snapshot(dir.path / "a"), snapshot(dir.path / "b"));
}

TEST(Cli, PipelineIsDeterministic) {
  test::TempDir dir("cli_pipe");
  const std::string data = (dir.path / "data").string();
  ASSERT_EQ(cli({"--seed", "3", "gen-data", "--out", data, "--n", "4", "--frames", "24", "--layout", "custom:2"}).code, 0);
  for (const char* run_name : {"r1", "r2"}) {
    const fs::path base = dir.path / run_name;
    const std::vector<std::string> model{"--variant", "XS", "--T", "20"};
    auto r = cli(with({"--seed", "3", "train", "--data", data, "--out", (base / "train").string(), "--steps", "4",
                       "--batch", "2", "--svg"}, model));
    ASSERT_EQ(r.code, 0) << r.err;
    r = cli({"--seed", "3", "sample", "--checkpoint", (base / "train" / "model.ckpt").string(), "--data", data, "--out",
             (base / "gen").string(), "--mode", "accel", "--N", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
    r = cli(with({"--seed", "3", "eval", "--real", data, "--gen", (base / "gen").string(), "--out",
                  (base / "eval.csv").string(), "--save-extractor", (base / "fx.ckpt").string()}, kFx));
    ASSERT_EQ(r.code, 0) << r.err;
    r = cli(with(with({"--seed", "3", "bench", "--checkpoint", (base / "train" / "model.ckpt").string(), "--data", data,
                       "--out", (base / "bench").string(), "--N", "4,9", "--runs", "2"}, model), kFx));
    ASSERT_EQ(r.code, 0) << r.err;
    r = cli(with(with({"--seed", "3", "ablate", "--data", data, "--out", (base / "ablate.csv").string(), "--axis",
                       "wider", "--T", "20", "--steps", "2", "--batch", "2", "--mode", "accel", "--N", "4"}, kFx),
                 {"--extractor", (base / "fx.ckpt").string()}));
    ASSERT_EQ(r.code, 0) << r.err;
  }
  const auto a = snapshot(dir.path / "r1");
  const auto b = snapshot(dir.path / "r2");
  EXPECT_EQ(a, b);
  EXPECT_TRUE(a.count("train/model.ckpt"));
  EXPECT_TRUE(a.count("train/loss.csv"));
  EXPECT_TRUE(a.count("train/loss.svg"));
  EXPECT_TRUE(a.count("gen/trace.csv"));
  EXPECT_TRUE(a.count("bench/bench.csv"));
  EXPECT_TRUE(fs::exists(dir.path / "r1" / "bench" / "bench_timing.csv"));
  EXPECT_NE(a.at("ablate.csv").find("axis,value,fgd,diversity,beat_align,srgr"), std::string::npos);
  EXPECT_NE(a.at("gen/trace.csv").find(",accel,3,"), std::string::npos);
}

TEST(Cli, ResumeContinuesTraining) {
  test::TempDir dir("cli_resume");
  const std::string data = (dir.path / "data").string();
  ASSERT_EQ(cli({"--seed", "4", "gen-data", "--out", data, "--n", "3", "--frames", "16", "--layout", "custom:2"}).code, 0);
  const std::vector<std::string> common{"--variant", "XS", "--T", "20", "--batch", "2"};
  ASSERT_EQ(cli(with({"--seed", "4", "train", "--data", data, "--out", (dir.path / "full").string(), "--steps", "6"},
                     common)).code, 0);
  ASSERT_EQ(cli(with({"--seed", "4", "train", "--data", data, "--out", (dir.path / "half").string(), "--steps", "3"},
                     common)).code, 0);
  const auto r = cli(with({"--seed", "4", "train", "--data", data, "--out", (dir.path / "rest").string(), "--steps", "6",
                           "--resume", (dir.path / "half" / "model.ckpt").string()}, common));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(read_text_file(dir.path / "rest" / "model.ckpt"), read_text_file(dir.path / "full" / "model.ckpt"));
  EXPECT_EQ(read_text_file(dir.path / "rest" / "loss.csv"), read_text_file(dir.path / "full" / "loss.csv"));
}
