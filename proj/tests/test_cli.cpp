#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "seqtext_cli_test";

std::string quote(const fs::path& p) { return "'" + p.string() + "'"; }

int run(const std::string& cmd) {
  const bool redirected = cmd.find('>') != std::string::npos;
  const int status = std::system((cmd + (redirected ? " 2>/dev/null" : " >/dev/null 2>&1")).c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string cli() { return quote(SEQTEXT_CLI_PATH); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Trains once on the separable binary corpus and shares the artefacts.
class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
    ASSERT_EQ(run(quote(SEQTEXT_SYNTH_PATH) + " separable --docs 32 --seed 7 -o " + quote(kWork / "sep.csv")), 0);
    ASSERT_EQ(run(cli() + " preprocess --data " + quote(kWork / "sep.csv") + " --out " + quote(kWork / "pre") +
                  " --max_len 40"),
              0);
    ASSERT_EQ(run(cli() + " train -q --data " + quote(kWork / "pre") + " --out " + quote(kWork / "run") +
                  " --epochs 200"),
              0);
  }
  static void TearDownTestSuite() { fs::remove_all(kWork); }

  static std::string model() { return quote(kWork / "run" / "model.ckpt"); }
};

}  // namespace

TEST_F(CliTest, TrainWritesArtefactsAndOverfits) {
  for (const char* f : {"model.ckpt", "curve.csv", "metrics.txt"}) EXPECT_TRUE(fs::exists(kWork / "run" / f)) << f;
  for (const char* f : {"vocab.tsv", "dataset.tsv", "config.txt", "stats.txt"})
    EXPECT_TRUE(fs::exists(kWork / "pre" / f)) << f;
  ASSERT_EQ(run(cli() + " evaluate --model " + model() + " --data " + quote(kWork / "pre") +
                " --split train --metrics " + quote(kWork / "train_metrics.txt")),
            0);
  EXPECT_NE(slurp(kWork / "train_metrics.txt").find("accuracy=100\n"), std::string::npos);
}

TEST_F(CliTest, InvalidConfigKeyExitsWithConfigStatus) {
  EXPECT_EQ(run(cli() + " train --data " + quote(kWork / "pre") + " --out " + quote(kWork / "x") + " --no_such_key 1"),
            1);
  EXPECT_EQ(run(cli() + " train --data " + quote(kWork / "pre") + " --out " + quote(kWork / "x") + " --epochs -3"), 1);
  EXPECT_EQ(run(cli() + " train --data " + quote(kWork / "pre") + " --out " + quote(kWork / "x") + " --max_len 50"), 1);
  EXPECT_EQ(run(cli()), 1);
}

TEST_F(CliTest, PredictEmptyInputGivesEmptyOutput) {
  const auto out = kWork / "empty_pred.txt";
  ASSERT_EQ(run(cli() + " predict --model " + model() + " </dev/null >" + quote(out)), 0);
  EXPECT_TRUE(slurp(out).empty());
}

TEST_F(CliTest, PredictAllOovLineStillPredicts) {
  const auto in = kWork / "oov.txt", out = kWork / "oov_pred.txt";
  std::ofstream(in) << "zzzqqq xxyyzz\n\n";
  ASSERT_EQ(run(cli() + " predict --model " + model() + " <" + quote(in) + " >" + quote(out)), 0);
  std::istringstream lines(slurp(out));
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    const auto tab = line.find('\t');
    ASSERT_NE(tab, std::string::npos) << line;
    const double p = std::stod(line.substr(tab + 1));
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
    ++n;
  }
  EXPECT_EQ(n, 2);
}

TEST_F(CliTest, MissingCheckpointIsADataError) {
  EXPECT_EQ(run(cli() + " predict --model " + quote(kWork / "nope.ckpt") + " </dev/null"), 2);
  EXPECT_EQ(run(cli() + " evaluate --model " + quote(kWork / "nope.ckpt") + " --data " + quote(kWork / "pre")), 2);
}

TEST_F(CliTest, CorruptCheckpointIsADataError) {
  auto bytes = slurp(kWork / "run" / "model.ckpt");
  bytes[bytes.size() / 2] ^= 0x40;
  std::ofstream(kWork / "bad.ckpt", std::ios::binary) << bytes;
  EXPECT_EQ(run(cli() + " predict --model " + quote(kWork / "bad.ckpt") + " </dev/null"), 2);
}
