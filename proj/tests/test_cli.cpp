#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "dsr/error.hpp"
#include "synthetic.hpp"
#include "test_util.hpp"

using namespace dsr;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

// Three well separated classes, 30 samples each, as CSV with a label column.
class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto split = dsr::testing::gaussian_classes(21, 3, 12, 20, 10, 8.0);
    save_csv(split.train, train_csv(), "label");
    save_csv(split.test, test_csv(), "label");
  }
  std::string train_csv() const { return (dir_ / "train.csv").string(); }
  std::string test_csv() const { return (dir_ / "test.csv").string(); }

  dsr::testing::TempDir dir_;
};

std::size_t count_lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST_F(CliTest, ClassifyWritesOneJsonLinePerQuery) {
  const auto r = invoke({"classify", "--csv", train_csv(), "--test-csv", test_csv(),
                         "--methods", "ldsr", "--lambda", "0.01", "--threads", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  ASSERT_EQ(count_lines(r.out), 30u);
  std::istringstream lines(r.out);
  std::string line;
  int correct = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    ASSERT_TRUE(j.contains("index"));
    ASSERT_EQ(j["scores"].size(), 3u);
    correct += j["label"] == j["predicted"] ? 1 : 0;
  }
  EXPECT_EQ(correct, 30);
}

TEST_F(CliTest, ClassifyHonoursMaxTestAndOutputFile) {
  const auto path = (dir_ / "pred.jsonl").string();
  const auto r = invoke({"classify", "--csv", train_csv(), "--test-csv", test_csv(),
                         "--methods", "nsc", "--max-test", "4", "--output", path});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  EXPECT_EQ(count_lines(dsr::testing::read_text(path)), 4u);
}

TEST_F(CliTest, MissingFileIsDataError) {
  const auto missing = (dir_ / "absent.csv").string();
  const auto r = invoke({"classify", "--csv", missing, "--test-csv", test_csv()});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find(missing), std::string::npos) << r.err;
}

TEST_F(CliTest, NegativeLambdaInConfigIsConfigError) {
  const auto cfg = dir_ / "bad.toml";
  dsr::testing::write_text(cfg, "lambda = -1\n");
  const auto r = invoke({"benchmark", "--csv", train_csv(), "--config", cfg.string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("lambda"), std::string::npos) << r.err;
}

TEST_F(CliTest, UnknownConfigKeyRejected) {
  const auto cfg = dir_ / "extra.toml";
  dsr::testing::write_text(cfg, "lambada = 1\n");
  EXPECT_EQ(invoke({"benchmark", "--csv", train_csv(), "--config", cfg.string()}).code, 2);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(invoke({}).code, 2);
  EXPECT_EQ(invoke({"frobnicate"}).code, 2);
  EXPECT_EQ(invoke({"benchmark", "--csv", train_csv(), "--methods", "ldsr,svm"}).code, 2);
  EXPECT_EQ(invoke({"benchmark", "--csv", train_csv(), "--trials", "0"}).code, 2);
  EXPECT_EQ(invoke({"benchmark"}).code, 2);
  EXPECT_EQ(invoke({"--help"}).code, 0);
}

TEST_F(CliTest, BenchmarkRowsAndDeterminism) {
  const std::vector<std::string> args{"benchmark", "--csv", train_csv(), "--per-class", "12",
                                      "--trials", "3", "--methods", "ldsr,crc",
                                      "--lambda", "0.01", "--seed", "5"};
  const auto a = invoke(args);
  ASSERT_EQ(a.code, 0) << a.err;
  const auto pos = a.out.find('[');
  ASSERT_NE(pos, std::string::npos);
  const auto j = nlohmann::json::parse(a.out.substr(pos));
  ASSERT_EQ(j.size(), 2u);
  EXPECT_EQ(j[0]["method"], "ldsr");
  EXPECT_EQ(j[1]["method"], "crc");
  EXPECT_EQ(j[0]["trials"], 3);
  EXPECT_TRUE(j[0]["seconds"].is_null());
  EXPECT_EQ(invoke(args).out, a.out);
}

TEST_F(CliTest, BenchmarkSweepEmitsCurve) {
  const auto json_path = (dir_ / "bench.json").string();
  const auto curve_path = (dir_ / "curve.csv").string();
  const auto r = invoke({"benchmark", "--csv", train_csv(), "--per-class", "12",
                         "--methods", "ldsr", "--sweep-locality", "0.1..0.8",
                         "--output", json_path, "--curve-output", curve_path});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto curve = dsr::testing::read_text(curve_path);
  EXPECT_EQ(curve.rfind("fraction,method,mean_top1,std_top1\n", 0), 0u);
  EXPECT_EQ(count_lines(curve), 9u);
  EXPECT_EQ(nlohmann::json::parse(dsr::testing::read_text(json_path)).size(), 1u);
}

TEST_F(CliTest, CompactWritesSmallerCsv) {
  const auto path = (dir_ / "compact.csv").string();
  const auto r = invoke({"compact", "--csv", train_csv(), "--compact-atoms", "5",
                         "--compact-iters", "4", "--output", path});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto ds = load_csv(path, "label");
  EXPECT_EQ(ds.size(), 15);
  EXPECT_EQ(ds.num_classes(), 3);
  EXPECT_EQ(invoke({"compact", "--csv", train_csv(), "--output", path}).code, 2);
}

TEST(CliSelftest, PassesAndCatchesCorruptedGradient) {
  const auto ok = invoke({"selftest", "--instances", "20"});
  EXPECT_EQ(ok.code, 0) << ok.out;
  EXPECT_EQ(ok.out.find("FAIL"), std::string::npos);
  const auto bad = invoke({"selftest", "--instances", "20", "--corrupt-gradient"});
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.out.find("FAIL"), std::string::npos);
}

TEST(CliConfig, RoundTripThroughConfigFile) {
  const auto cfg = cli::parse_args({"sweep", "--csv", "a b.csv", "--per-class", "50,100",
                                    "--seed", "9", "--trials", "4", "--methods", "kldsr,nsc",
                                    "--lambda", "0.123456789012345", "--eta", "1e-7",
                                    "--gamma", "0", "--locality", "0.25", "--sigma", "3.5",
                                    "--kernel", "linear", "--compact-atoms", "7",
                                    "--compact-tau", "0.5", "--sweep-locality", "0.2,0.4",
                                    "--no-normalize", "--record-timing", "--threads", "2"});
  dsr::testing::TempDir dir;
  const auto path = dir / "cfg.toml";
  dsr::testing::write_text(path, cli::to_config_file(cfg));
  const auto back = cli::parse_args({"sweep", "--config", path.string()});
  EXPECT_TRUE(back == cfg) << cli::to_config_file(back);
}

TEST(CliConfig, FlagsOverrideConfig) {
  dsr::testing::TempDir dir;
  const auto path = dir / "cfg.toml";
  dsr::testing::write_text(path, "csv = \"x.csv\"\nlambda = 0.5\nseed = 3\n");
  const auto cfg = cli::parse_args({"benchmark", "--config", path.string(), "--lambda", "0.25"});
  EXPECT_EQ(cfg.hp.lambda, 0.25);
  EXPECT_EQ(cfg.seed, 3u);
}

TEST(CliConfig, ParseFractions) {
  const auto range = cli::parse_fractions("0.1..0.8");
  ASSERT_EQ(range.size(), 8u);
  EXPECT_EQ(range.front(), 0.1);
  EXPECT_EQ(range[2], 0.3);
  EXPECT_EQ(range.back(), 0.8);
  EXPECT_EQ(cli::parse_fractions("0.5,1"), (std::vector<double>{0.5, 1.0}));
  EXPECT_THROW(cli::parse_fractions("0,0.5"), Error);
  EXPECT_THROW(cli::parse_fractions("x"), Error);
}
