#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "planarcda/dataset_io.hpp"
#include "planarcda/evaluation.hpp"
#include "planarcda/model_io.hpp"
#include "temp_dir.hpp"

using namespace planarcda;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
};

// stderr is discarded; tests look at exit codes and stdout only.
CliRun cli(const std::string& args) {
  const std::string cmd = std::string(PLANARCDA_CLI) + " " + args + " 2>/dev/null";
  CliRun r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t got;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST(Cli, SynthWritesSixtyPairs) {
  TempDir dir("cli");
  const CliRun r = cli("synth --seed 7 --out " + q(dir / "d"));
  ASSERT_EQ(r.code, 0);
  const LabeledPairSet data = load_image_dir(dir / "d");
  EXPECT_EQ(data.size(), 60u);
  EXPECT_EQ(data.classes, 3);
  EXPECT_EQ(data.m(), 16);
  EXPECT_EQ(data.p(), 8);
}

TEST(Cli, SynthIsReproducible) {
  TempDir dir("cli");
  ASSERT_EQ(cli("synth --seed 5 --classes 2 --per-class 2 --shape 4,4,2,2 --out " + q(dir / "d")).code, 0);
  const std::string first = slurp(dir / "d" / "x" / "c01" / "s0001.pgm");
  ASSERT_FALSE(first.empty());
  // refuses to overwrite without --force
  EXPECT_EQ(cli("synth --seed 5 --classes 2 --per-class 2 --shape 4,4,2,2 --out " + q(dir / "d")).code, 2);
  ASSERT_EQ(cli("synth --seed 5 --classes 2 --per-class 2 --shape 4,4,2,2 --force --out " + q(dir / "d")).code, 0);
  EXPECT_EQ(slurp(dir / "d" / "x" / "c01" / "s0001.pgm"), first);
}

TEST(Cli, SynthRejectsSingleClass) {
  TempDir dir("cli");
  EXPECT_EQ(cli("synth --classes 1 --out " + q(dir / "d")).code, 2);
}

TEST(Cli, FitExitCodes) {
  TempDir dir("cli");
  ASSERT_EQ(cli("synth --seed 2 --y-wavelet 1 --out " + q(dir / "wav")).code, 0);
  ASSERT_EQ(cli("synth --seed 1 --out " + q(dir / "plain")).code, 0);

  EXPECT_EQ(cli("fit --method 2dcca --data " + q(dir / "wav") + " --out " + q(dir / "a.json")).code, 0);
  EXPECT_TRUE(fs::exists(dir / "a.json"));
  // independent-noise second view: the alternation is still creeping at max_iter
  EXPECT_EQ(cli("fit --method 2dcca --data " + q(dir / "plain") + " --out " + q(dir / "b.json")).code, 3);
  EXPECT_TRUE(fs::exists(dir / "b.json"));

  EXPECT_EQ(cli("fit --method svm --data " + q(dir / "wav") + " --out " + q(dir / "c.json")).code, 2);
  EXPECT_EQ(cli("fit --method 2dcca --data " + q(dir / "missing") + " --out " + q(dir / "c.json")).code, 2);
  EXPECT_EQ(cli("fit --method pca --d1 3 --data " + q(dir / "wav") + " --out " + q(dir / "c.json")).code, 2);
  EXPECT_FALSE(fs::exists(dir / "c.json"));
}

TEST(Cli, OneSamplePerClassLeavesOnlyNullBranch) {
  TempDir dir("cli");
  ASSERT_EQ(cli("synth --seed 3 --classes 4 --per-class 1 --shape 6,6,3,3 --out " + q(dir / "d")).code, 0);
  const CliRun r = cli("fit --method cdtrl --data " + q(dir / "d") + " --out " + q(dir / "m.json"));
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("range branch: empty"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("null branch: present"), std::string::npos) << r.out;
  const auto model = std::get<CdtrlModel>(load_model((dir / "m.json").string()));
  EXPECT_TRUE(model.range.empty());
}

TEST(Cli, FitTransformRoundTrip) {
  TempDir dir("cli");
  ASSERT_EQ(cli("synth --seed 4 --per-class 6 --shape 8,8,4,4 --out " + q(dir / "d")).code, 0);
  ASSERT_EQ(cli("fit --method cdtrl --d1 3 --d2 3 --data " + q(dir / "d") + " --out " + q(dir / "m.json")).code, 0);
  const CliRun t = cli("transform --model " + q(dir / "m.json") + " --data " + q(dir / "d"));
  ASSERT_EQ(t.code, 0);
  const auto j = nlohmann::json::parse(t.out);
  const LabeledPairSet data = load_image_dir(dir / "d");
  const FittedModel model = load_model((dir / "m.json").string());
  ASSERT_EQ(j.at("features").size(), data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_EQ(j["features"][i]["label"].get<int>(), data.labels[i]);
    EXPECT_TRUE(mat_from_json(j["features"][i]) == model_features(model, data.x[i], data.y[i]));
  }
}

TEST(Cli, EvalReportsBothMethodsDeterministically) {
  TempDir dir("cli");
  ASSERT_EQ(cli("synth --seed 6 --per-class 8 --shape 8,8,4,4 --out " + q(dir / "d")).code, 0);
  const std::string args = "eval --protocol loo --methods cdtrl,2dcca --data " + q(dir / "d");
  const CliRun a = cli(args);
  const CliRun b = cli(args);
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  const auto rows = parse_report(a.out);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].method, "CDTRL");
  EXPECT_EQ(rows[1].method, "2DCCA");
  EXPECT_EQ(rows[0].n_test, 24u);
  EXPECT_EQ(rows[0].runtime_ms, 0);
  EXPECT_GE(rows[0].accuracy, rows[1].accuracy);
}

TEST(Cli, EvalSplitAndBadProtocol) {
  TempDir dir("cli");
  ASSERT_EQ(cli("synth --seed 11 --per-class 4 --shape 8,8,4,4 --noise 0.01 --out " + q(dir / "front")).code, 0);
  ASSERT_EQ(
      cli("synth --seed 11 --per-class 4 --shape 8,8,4,4 --noise 0.01 --variant 1 --out " + q(dir / "left")).code, 0);
  const CliRun r = cli("eval --protocol split --methods cdtrl,2dpca --train " + q(dir / "front") + " --test " +
                    q(dir / "left"));
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(parse_report(r.out).size(), 2u);
  EXPECT_EQ(cli("eval --protocol kfold --data " + q(dir / "front")).code, 2);
}

TEST(Cli, BenchSmallGrid) {
  const CliRun r = cli("bench --sizes 4,6,8 --samples 12 --reps 1");
  ASSERT_EQ(r.code, 0);
  std::istringstream in(r.out);
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  EXPECT_EQ(lines, 1 + 3 * 3);  // three methods per size
}

TEST(Cli, NoSubcommandIsInputError) { EXPECT_EQ(cli("").code, 2); }
