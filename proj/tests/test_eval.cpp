#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "dsr/error.hpp"
#include "dsr/eval.hpp"
#include "synthetic.hpp"

using namespace dsr;

namespace {

// Decides from the first coordinate: class c scores |x_0 - c|.
class CoordinateClassifier final : public Classifier {
 public:
  CoordinateClassifier(ClassPartitionedDataset train, std::function<double(double)> warp)
      : train_(std::move(train)), warp_(std::move(warp)) {}
  const ClassPartitionedDataset& train() const override { return train_; }
  ClassDecision classify(const Eigen::VectorXd& x) const override {
    std::vector<double> s(static_cast<std::size_t>(train_.num_classes()));
    for (int c = 0; c < train_.num_classes(); ++c) s[c] = std::abs(warp_(x[0]) - c);
    return decide(s);
  }

 private:
  ClassPartitionedDataset train_;
  std::function<double(double)> warp_;
};

ClassPartitionedDataset coded(const std::vector<int>& labels, int dim = 2) {
  Eigen::MatrixXd cols = Eigen::MatrixXd::Zero(dim, static_cast<Index>(labels.size()));
  std::vector<std::string> names;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    cols(0, static_cast<Index>(j)) = labels[j];
    names.push_back(std::to_string(labels[j]));
  }
  return make_dataset(cols, names);
}

HyperParams synthetic_params() {
  HyperParams hp;
  hp.lambda = 1e-2;
  hp.eta = 1e-2;
  hp.gamma = 1e-2;
  return hp;
}

}  // namespace

TEST(Evaluate, PerfectClassifierGivesDiagonalConfusion) {
  const auto train = coded({0, 1, 2});
  const auto test = coded({0, 0, 1, 1, 1, 2, 2, 2, 2, 0});
  const CoordinateClassifier clf(train, [](double v) { return v; });
  const auto r = evaluate(clf, test);
  EXPECT_EQ(r.top1, 1.0);
  EXPECT_EQ(r.top5, 1.0);
  EXPECT_EQ(r.confusion, (Eigen::MatrixXi(3, 3) << 3, 0, 0, 0, 3, 0, 0, 0, 4).finished());
}

TEST(Evaluate, ConstantPredictorOnBalancedPair) {
  const auto train = coded({0, 1});
  const auto test = coded({0, 0, 0, 1, 1, 1});
  const CoordinateClassifier clf(train, [](double) { return 0.0; });
  const auto r = evaluate(clf, test);
  EXPECT_DOUBLE_EQ(r.top1, 0.5);
  EXPECT_EQ(r.confusion.col(0).sum(), 6);
}

TEST(Evaluate, TopFiveCoversThreeClasses) {
  const auto train = coded({0, 1, 2});
  const auto test = coded({0, 1, 2, 2, 1});
  const CoordinateClassifier clf(train, [](double) { return 2.0; });
  const auto r = evaluate(clf, test);
  EXPECT_EQ(r.top5, 1.0);
  EXPECT_LT(r.top1, 1.0);
}

TEST(Evaluate, UnseenTestClassesCountAsErrors) {
  const auto train = coded({0, 1});
  const auto test = coded({0, 1, 5, 5});
  const CoordinateClassifier clf(train, [](double v) { return v; });
  const auto r = evaluate(clf, test);
  EXPECT_DOUBLE_EQ(r.top1, 0.5);
  EXPECT_EQ(r.class_names, (std::vector<std::string>{"0", "1", "5"}));
  EXPECT_EQ(r.confusion.row(2).sum(), 2);
  EXPECT_EQ(r.confusion(2, 2), 0);
}

TEST(Evaluate, ConfusionInvariants) {
  const auto split = dsr::testing::gaussian_classes(1, 4, 30, 15, 25, 1.5);
  for (auto m : {Method::Ldsr, Method::Kldsr, Method::Crc, Method::Nsc}) {
    const auto r = evaluate(m, split.train, split.test, synthetic_params());
    for (int c = 0; c < 4; ++c) EXPECT_EQ(r.confusion.row(c).sum(), split.test.class_size(c));
    EXPECT_DOUBLE_EQ(r.top1, static_cast<double>(r.confusion.trace()) / split.test.size());
    EXPECT_GE(r.top5, r.top1);
    EXPECT_EQ(r.method, m);
  }
}

TEST(Evaluate, DimensionMismatch) {
  const auto train = coded({0, 1}, 2);
  const auto test = coded({0, 1}, 3);
  const CoordinateClassifier clf(train, [](double v) { return v; });
  EXPECT_THROW(evaluate(clf, test), Error);
}

TEST(Evaluate, MaxTestTakesInputOrderPrefix) {
  const auto train = coded({0, 1});
  const auto test = coded({1, 0, 0, 1, 1});
  const CoordinateClassifier clf(train, [](double) { return 0.0; });
  EvalOptions opts;
  opts.max_test = 2;
  const auto r = evaluate(clf, test, opts);
  EXPECT_DOUBLE_EQ(r.top1, 0.5);
  EXPECT_EQ(r.confusion.sum(), 2);
}

TEST(RunProtocol, SingleTrialHasZeroSpread) {
  const auto ds = dsr::testing::pooled(dsr::testing::gaussian_classes(2, 3, 20, 10, 10, 2.0));
  const auto table = run_protocol(ds, nullptr, {8, 5, 1}, {Method::Ldsr}, synthetic_params());
  ASSERT_EQ(table.rows.size(), 1u);
  EXPECT_EQ(table.rows[0].std_top1, 0.0);
  const auto split = draw_split(ds, {8, 5, 1});
  const auto single = evaluate(Method::Ldsr, split.train, split.held_out, synthetic_params());
  EXPECT_EQ(table.rows[0].mean_top1, single.top1);
  EXPECT_EQ(table.rows[0].mean_top5, single.top5);
}

TEST(RunProtocol, TrialSeedsCountUpFromMaster) {
  const auto ds = dsr::testing::pooled(dsr::testing::gaussian_classes(3, 3, 20, 10, 10, 1.0));
  const auto hp = synthetic_params();
  const auto table = run_protocol(ds, nullptr, {6, 40, 3}, {Method::Crc}, hp);
  std::vector<double> acc;
  for (std::uint64_t t = 0; t < 3; ++t) {
    const auto split = draw_split(ds, {6, 40 + t, 1});
    acc.push_back(evaluate(Method::Crc, split.train, split.held_out, hp).top1);
  }
  const double mean = (acc[0] + acc[1] + acc[2]) / 3;
  double sq = 0;
  for (double a : acc) sq += (a - mean) * (a - mean);
  EXPECT_DOUBLE_EQ(table.rows[0].mean_top1, mean);
  EXPECT_NEAR(table.rows[0].std_top1, std::sqrt(sq / 2), 1e-15);
}

TEST(RunProtocol, TwoMethodsTwoRowsAndBitwiseRepeatable) {
  const auto ds = dsr::testing::pooled(dsr::testing::gaussian_classes(4, 3, 20, 10, 10, 1.0));
  const SplitSpec spec{6, 9, 2};
  const auto a = run_protocol(ds, nullptr, spec, {Method::Ldsr, Method::Crc}, synthetic_params());
  const auto b = run_protocol(ds, nullptr, spec, {Method::Ldsr, Method::Crc}, synthetic_params());
  ASSERT_EQ(a.rows.size(), 2u);
  EXPECT_EQ(a.rows[0].method, Method::Ldsr);
  EXPECT_EQ(a.rows[1].method, Method::Crc);
  EXPECT_EQ(to_json(a, false).dump(), to_json(b, false).dump());
}

TEST(RunProtocol, DesignatedTestSetIsUsed) {
  const auto split = dsr::testing::gaussian_classes(5, 2, 20, 10, 7, 10.0);
  const auto table = run_protocol(split.train, &split.test, {10, 0, 1}, {Method::Nsc},
                                  synthetic_params());
  EXPECT_EQ(table.rows[0].mean_top1, 1.0);
}

TEST(RunProtocol, CompactionRunsPerTrial) {
  const auto ds = dsr::testing::pooled(dsr::testing::gaussian_classes(6, 2, 20, 12, 10, 10.0));
  EvalOptions opts;
  opts.compaction = DictionaryOptions{4, 0.0, 5, 0};
  const auto table = run_protocol(ds, nullptr, {10, 1, 2}, {Method::Nsc}, synthetic_params(), opts);
  EXPECT_EQ(table.rows[0].mean_top1, 1.0);
}

TEST(SweepLocality, UnitFractionEqualsProtocol) {
  const auto ds = dsr::testing::pooled(dsr::testing::gaussian_classes(7, 3, 20, 10, 10, 1.0));
  const SplitSpec spec{6, 2, 2};
  auto hp = synthetic_params();
  const auto curve = sweep_locality(ds, nullptr, spec, {1.0}, hp);
  hp.locality_fraction = 1.0;
  const auto table = run_protocol(ds, nullptr, spec, {Method::Ldsr, Method::Kldsr}, hp);
  ASSERT_EQ(curve.points.size(), 2u);
  EXPECT_EQ(curve.points[0].mean_top1, table.rows[0].mean_top1);
  EXPECT_EQ(curve.points[1].mean_top1, table.rows[1].mean_top1);
}

TEST(SweepLocality, EightFractionsEightPointsPerMethod) {
  const auto ds = dsr::testing::pooled(dsr::testing::gaussian_classes(8, 2, 10, 10, 5, 3.0));
  const std::vector<double> f{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
  const auto curve = sweep_locality(ds, nullptr, {5, 0, 1}, f, synthetic_params());
  EXPECT_EQ(curve.points.size(), 16u);
  const auto csv = to_csv(curve);
  EXPECT_EQ(csv.rfind("fraction,method,mean_top1,std_top1\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 17);
}

TEST(SweepCurve, BestFractionTiesGoLow) {
  SweepCurve curve;
  curve.points = {{0.1, Method::Ldsr, 0.8, 0}, {0.2, Method::Ldsr, 0.9, 0},
                  {0.3, Method::Ldsr, 0.9, 0}, {0.1, Method::Kldsr, 0.95, 0}};
  EXPECT_EQ(curve.best_fraction(Method::Ldsr), 0.2);
  EXPECT_EQ(curve.best_fraction(Method::Kldsr), 0.1);
}

TEST(Output, JsonSchemaAndTimingToggle) {
  ProtocolTable table;
  table.rows.push_back({Method::Crc, 50, 3, 0.9, 0.01, 0.99, 12.5});
  const auto plain = to_json(table, false);
  ASSERT_EQ(plain.size(), 1u);
  for (const char* key : {"method", "n_per_class", "trials", "mean_top1", "std_top1",
                          "mean_top5", "seconds"}) {
    EXPECT_TRUE(plain[0].contains(key)) << key;
  }
  EXPECT_EQ(plain[0]["method"], "crc");
  EXPECT_TRUE(plain[0]["seconds"].is_null());
  EXPECT_EQ(to_json(table, true)[0]["seconds"], 12.5);
  EXPECT_NE(to_text(table, false).find("crc"), std::string::npos);
}

TEST(Methods, ParseAndPrint) {
  EXPECT_EQ(parse_methods("ldsr,crc"), (std::vector<Method>{Method::Ldsr, Method::Crc}));
  for (auto m : {Method::Ldsr, Method::Kldsr, Method::Crc, Method::Nsc}) {
    EXPECT_EQ(parse_method(to_string(m)), m);
  }
  EXPECT_THROW(parse_methods(""), Error);
  EXPECT_THROW(parse_method("src"), Error);
}
