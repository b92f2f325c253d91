#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "config_file.hpp"
#include "seqscore/errors.hpp"

namespace seqscore::cli {
namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(const std::vector<std::string>& args, const std::string& input = "") {
  std::istringstream in(input);
  std::ostringstream out, err;
  const int code = run(args, in, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("seqscore_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    std::filesystem::remove_all(dir_);
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
    return path(name);
  }

  std::filesystem::path dir_;
};

TEST(ConfigFile, ParsesAllExperimentKeys) {
  const ExperimentConfig c = parse_experiment(
      "family: linear\nscheme: uniform\ntheta0: [0, 1]\nbeta_true: [0.1, -0.1]\nbeta0: [0, 0]\n"
      "alpha: 0.1\ntau: 0.5\nbatch: 100\ncap_n: 500\nreplications: 3\nseed: 9\nmethod: msprt\n");
  EXPECT_EQ(c.family.kind, FamilyKind::normal_identity);
  EXPECT_EQ(c.scheme, CovariateScheme::uniform_pm1);
  EXPECT_EQ(c.beta_true(1), -0.1);
  EXPECT_EQ(c.alpha, 0.1);
  EXPECT_EQ(c.tau, 0.5);
  EXPECT_EQ(c.batch, 100);
  EXPECT_EQ(c.cap_n, 500);
  EXPECT_EQ(c.replications, 3);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.method, Method::msprt);
}

TEST(ConfigFile, RejectsBadConfigs) {
  EXPECT_THROW(parse_experiment("famly: logistic\n"), ConfigError);
  EXPECT_THROW(parse_experiment("family: gamma\n"), ConfigError);
  EXPECT_THROW(parse_experiment("theta0: [0, 1, 2]\n"), ConfigError);
  EXPECT_THROW(parse_experiment("alpha: lots\n"), ConfigError);
  EXPECT_THROW(parse_experiment("batch: 3\n"), ConfigError);
  EXPECT_THROW(parse_experiment("[1, 2]"), ConfigError);
  EXPECT_THROW(parse_experiment("family: [logistic\n"), ConfigError);
  EXPECT_THROW(parse_experiment("m: 8\n"), ConfigError);
  EXPECT_THROW(parse_multiple_study("m: 6\n"), ConfigError);
}

TEST(ConfigFile, MultipleStudyKeys) {
  const MultipleStudyConfig s = parse_multiple_study("m: 16\neffect_b: 0.3\nreps: 4\n");
  EXPECT_EQ(s.m, 16);
  EXPECT_EQ(s.effects, std::vector<double>{0.3});
  EXPECT_EQ(s.base.replications, 4);
  EXPECT_EQ(parse_multiple_study("effect_b: [0.1, 0.2]\n").effects.size(), 2u);
}

TEST_F(CliTest, SimulatePrintsTableAndRecord) {
  const auto cfg = write("sim.yaml",
                         "family: logistic\nscheme: normal\ntheta0: [0, 1]\nbeta_true: [-0.5, 0.5]\n"
                         "cap_n: 1000\nreplications: 4\nseed: 3\n");
  const Result r = run_cli({"simulate", cfg, "--threads", "1"});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("rejection rate"), std::string::npos);
  EXPECT_NE(r.out.find("{\"config\":"), std::string::npos);

  const Result to_file = run_cli({"simulate", cfg, "--records", path("out.jsonl")});
  EXPECT_EQ(to_file.code, kExitOk);
  EXPECT_EQ(to_file.out.find("{\"config\":"), std::string::npos);
  std::ifstream records(path("out.jsonl"));
  std::string line;
  ASSERT_TRUE(std::getline(records, line));
  EXPECT_EQ(line.rfind("{\"config\":", 0), 0u);
}

TEST_F(CliTest, ConfigErrorsExitNonZero) {
  EXPECT_EQ(run_cli({"simulate", write("bad.yaml", "bogus: 1\n")}).code, kExitConfig);
  EXPECT_EQ(run_cli({"simulate", path("missing.yaml")}).code, kExitConfig);
  EXPECT_EQ(run_cli({"multiple", write("m.yaml", "m: 5\n")}).code, kExitConfig);
  EXPECT_EQ(run_cli({"replay", path("missing.csv")}).code, kExitConfig);
  EXPECT_EQ(run_cli({"monitor", "--family", "gamma"}, "timestamp,variant,response\n1,A,1\n").code, kExitConfig);
  EXPECT_EQ(run_cli({"monitor", "--alpha", "2"}, "timestamp,variant,response\n1,A,1\n").code, kExitConfig);
  EXPECT_EQ(run_cli({"frobnicate"}).code, kExitConfig);
  EXPECT_EQ(run_cli({}).code, kExitConfig);
  EXPECT_EQ(run_cli({"--help"}).code, kExitOk);
}

TEST_F(CliTest, EmptyInputGivesEmptyOutput) {
  const Result r = run_cli({"monitor"}, "");
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_EQ(r.out, "");
  EXPECT_EQ(run_cli({"replay", write("empty.csv", "")}).out, "");
}

TEST_F(CliTest, MalformedInputStrictVersusLenient) {
  const auto log = write("log.csv", "timestamp,variant,response,x1\n1,A,1,0.5\n2,B,maybe,0.5\n3,A,0,0.1\n");
  const Result strict = run_cli({"replay", log, "--batch", "2"});
  EXPECT_EQ(strict.code, kExitData);
  EXPECT_NE(strict.err.find("record 3"), std::string::npos);
  const Result lenient = run_cli({"replay", log, "--batch", "2", "--lenient"});
  EXPECT_EQ(lenient.code, kExitOk);
  EXPECT_NE(lenient.err.find("skipped 1"), std::string::npos);
}

TEST_F(CliTest, GenerateReplayAndPairwise) {
  const Result gen = run_cli({"generate-log", "--events", "6000", "--variants", "A,B,C", "--seed", "4", "--effect",
                              "C=0,2,-2,2,-2", "--out", path("log.csv")});
  ASSERT_EQ(gen.code, kExitOk) << gen.err;
  const Result replay = run_cli({"replay", path("log.csv"), "--control", "A", "--treatment", "C", "--lenient"});
  EXPECT_EQ(replay.code, kExitOk) << replay.err;
  EXPECT_NE(replay.out.find("\"n1\":"), std::string::npos);
  EXPECT_EQ(replay.out, run_cli({"replay", path("log.csv"), "--control", "A", "--treatment", "C", "--lenient"}).out);

  const Result pairs = run_cli({"pairwise", path("log.csv"), "--variants", "A,B,C", "--stop-n", "1500"});
  EXPECT_EQ(pairs.code, kExitOk) << pairs.err;
  EXPECT_NE(pairs.out.find("\"pair\":\"A:B\""), std::string::npos);
  EXPECT_NE(pairs.out.find("\"m\":3"), std::string::npos);

  EXPECT_EQ(run_cli({"generate-log", "--effect", "Z=1,1,1,1,1"}).code, kExitConfig);
  EXPECT_EQ(run_cli({"pairwise", path("log.csv"), "--variants", "A", "--stop-n", "10"}).code, kExitConfig);
}

TEST_F(CliTest, AaCheckCountsRejections) {
  ASSERT_EQ(run_cli({"generate-log", "--events", "3000", "--out", path("log.csv")}).code, kExitOk);
  const Result r = run_cli({"aa-check", path("log.csv"), "--seed", "3", "--relabelings", "4", "--threads", "1"});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("{\"relabelings\":4,\"rejections\":"), std::string::npos);
  EXPECT_EQ(r.out, run_cli({"aa-check", path("log.csv"), "--seed", "3", "--relabelings", "4"}).out);
}

TEST_F(CliTest, MonitorWithStateFileContinuesAcrossInvocations) {
  ASSERT_EQ(run_cli({"generate-log", "--events", "3000", "--seed", "8", "--out", path("log.csv")}).code, kExitOk);
  std::ifstream in(path("log.csv"));
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  auto join = [&](std::size_t from, std::size_t to) {
    std::string text = lines[0] + "\n";
    for (std::size_t i = from; i < to; ++i) text += lines[i] + "\n";
    return text;
  };
  const std::vector<std::string> flags{"monitor", "--batch", "100", "--state-file", path("state")};
  const Result whole = run_cli(flags, join(1, lines.size()));
  std::filesystem::remove(path("state"));
  const Result part1 = run_cli(flags, join(1, 1234));
  const Result part2 = run_cli(flags, join(1234, lines.size()));
  EXPECT_EQ(part1.code, kExitOk);
  EXPECT_EQ(part2.code, kExitOk) << part2.err;
  EXPECT_EQ(part1.out + part2.out, whole.out);

  // A different configuration must not silently reuse the state.
  const Result mismatch = run_cli({"monitor", "--batch", "50", "--state-file", path("state")}, join(1, 10));
  EXPECT_EQ(mismatch.code, kExitData);
}

TEST_F(CliTest, ReplayResumeSkipsConsumedRecords) {
  ASSERT_EQ(run_cli({"generate-log", "--events", "2000", "--seed", "12", "--out", path("log.csv")}).code, kExitOk);
  const Result full = run_cli({"replay", path("log.csv"), "--batch", "100"});
  std::ifstream in(path("log.csv"));
  std::string head;
  for (std::string line; std::getline(in, line) && head.size() < 30000;) head += line + "\n";
  const auto partial = write("partial.csv", head);
  const Result first = run_cli({"monitor", "--batch", "100", "--state-file", path("state")}, head);
  const Result rest = run_cli({"replay", path("log.csv"), "--batch", "100", "--state-file", path("state"), "--resume"});
  EXPECT_EQ(rest.code, kExitOk) << rest.err;
  EXPECT_EQ(first.out + rest.out, full.out);
  (void)partial;
}

}  // namespace
}  // namespace seqscore::cli
