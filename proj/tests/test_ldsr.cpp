#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "dsr/baselines.hpp"
#include "dsr/error.hpp"
#include "dsr/ldsr.hpp"
#include "dsr/oracles.hpp"

using namespace dsr;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

HyperParams params(double lambda, double eta, double gamma, double fraction) {
  HyperParams hp;
  hp.lambda = lambda;
  hp.eta = eta;
  hp.gamma = gamma;
  hp.locality_fraction = fraction;
  return hp;
}

// Unit vectors e_0 and e_1 in R^10, five noisy copies each.
ClassPartitionedDataset two_axes(std::mt19937_64& rng, double noise) {
  std::normal_distribution<double> normal(0.0, noise);
  Eigen::MatrixXd cols(10, 10);
  std::vector<std::string> labels;
  for (Index j = 0; j < 10; ++j) {
    for (Index i = 0; i < 10; ++i) cols(i, j) = normal(rng);
    cols(j < 5 ? 0 : 1, j) += 1.0;
    labels.push_back(j < 5 ? "1" : "2");
  }
  return make_dataset(cols, labels);
}

void expect_same_decision(const ClassDecision& a, const ClassDecision& b) {
  EXPECT_EQ(a.predicted, b.predicted);
  ASSERT_EQ(a.scores.size(), b.scores.size());
  for (std::size_t c = 0; c < a.scores.size(); ++c) {
    if (std::isinf(a.scores[c])) {
      EXPECT_TRUE(std::isinf(b.scores[c]));
    } else {
      EXPECT_NEAR(a.scores[c], b.scores[c], 1e-9 * (1 + std::abs(a.scores[c])));
    }
  }
}

}  // namespace

TEST(SelectSmallest, OrderStatistics) {
  const std::vector<double> d{0.1, 0.5, 0.3};
  EXPECT_EQ(select_smallest(d, 2), (std::vector<Index>{0, 2}));
  EXPECT_EQ(select_smallest(d, 3), (std::vector<Index>{0, 1, 2}));
}

TEST(SelectSmallest, TiesGoToLowerIndex) {
  const std::vector<double> d{0.1, 0.9, 0.2, 0.8, 0.3, 0.7, 0.6, 0.3};
  EXPECT_EQ(select_smallest(d, 4), (std::vector<Index>{0, 2, 4, 7}));
  EXPECT_EQ(select_smallest(d, 3), (std::vector<Index>{0, 2, 4}));
}

TEST(LocalitySize, RoundsAndClamps) {
  EXPECT_EQ(locality_size(10, 0.3), 3);
  EXPECT_EQ(locality_size(10, 0.25), 3);  // round half away from zero
  EXPECT_EQ(locality_size(10, 0.01), 1);
  EXPECT_EQ(locality_size(10, 1.0), 10);
  EXPECT_EQ(locality_size(3000, 0.3), 900);
}

TEST(Decide, ArgminRankingAndTies) {
  const auto d = decide({2.0, 0.5, kInf, 0.5});
  EXPECT_EQ(d.predicted, 1);
  EXPECT_EQ(d.ranking, (std::vector<int>{1, 3, 0, 2}));
  EXPECT_THROW(decide({kInf, kInf}), Error);
  try {
    decide({kInf});
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AllScoresInfinite);
  }
}

TEST(Decide, InvariantUnderPositiveScaling) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> s(6);
    for (auto& v : s) v = u(rng);
    s[t % 6] = kInf;
    auto scaled = s;
    for (auto& v : scaled) v *= 7.3;
    const auto a = decide(s);
    const auto b = decide(scaled);
    EXPECT_EQ(a.predicted, b.predicted);
    EXPECT_EQ(a.ranking, b.ranking);
  }
}

TEST(RegularizedResidual, ZeroCoefficientNormIsInfinite) {
  EXPECT_EQ(regularized_residual(1.0, 0.0), kInf);
  EXPECT_EQ(regularized_residual(0.0, 0.0), kInf);
  EXPECT_DOUBLE_EQ(regularized_residual(3.0, 2.0), 1.5);
}

TEST(Ldsr, SeparatedAxesPickTheNearAxis) {
  std::mt19937_64 rng(2);
  const auto train = two_axes(rng, 1e-3);
  const auto hp = params(1e-3, 1e-3, 1e-3, 0.5);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(10);
  x[0] = 1.0;
  x[4] = 2e-3;
  const auto decision = classify(train, x, hp);
  EXPECT_EQ(decision.predicted, 0);
  EXPECT_EQ(nsc_classify(train, x).predicted, 0);
  x.setZero();
  x[1] = 1.0;
  EXPECT_EQ(classify(train, x, hp).predicted, 1);
}

TEST(Ldsr, FullLocalityMatchesDirectSolve) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    const auto inst = oracle::random_instance(rng, 12, {3, 4, 2});
    const auto hp = params(0.1, 0.2, 0.3, 1.0);
    const LdsrClassifier clf(inst.train, hp);
    const auto set = clf.select_locality(inst.query);
    EXPECT_EQ(set.selected_indices.size(), 9u);
    EXPECT_EQ(set.surviving_classes, (std::vector<int>{0, 1, 2}));
    const auto fit = clf.fit_locality(inst.query);
    const auto direct = solve(inst.train, inst.query, hp);
    EXPECT_LE((fit.beta - direct.coeffs).lpNorm<Eigen::Infinity>(), 1e-10);
  }
}

TEST(Ldsr, SelectionKeepsSmallestResidualDistances) {
  std::mt19937_64 rng(4);
  const auto inst = oracle::random_instance(rng, 8, {5, 5, 5});
  const auto hp = params(0.05, 0.1, 0.1, 0.4);
  const LdsrClassifier clf(inst.train, hp);
  const auto alpha = clf.first_stage(inst.query, true);
  EXPECT_LE(alpha.grad_inf_norm, kStationarityTol * (1 + alpha.objective));
  const auto d = residual_distances(inst.train, inst.query, alpha);
  const auto set = clf.select_locality(inst.query);
  ASSERT_EQ(set.selected_indices.size(), 6u);
  double worst_kept = 0.0;
  for (auto i : set.selected_indices) worst_kept = std::max(worst_kept, d[i]);
  for (Index i = 0; i < d.size(); ++i) {
    if (std::find(set.selected_indices.begin(), set.selected_indices.end(), i) ==
        set.selected_indices.end()) {
      EXPECT_GE(d[i], worst_kept);
    }
  }
  EXPECT_TRUE(std::is_sorted(set.selected_indices.begin(), set.selected_indices.end()));
  EXPECT_EQ(set.subset.size(), 6);
}

TEST(Ldsr, StageTwoUsesSurvivingClassCount) {
  // Three classes; the query sits on class 0's axis so a small locality set
  // holds class 0 and at most one other class.
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 0.05);
  Eigen::MatrixXd cols(6, 12);
  std::vector<std::string> labels;
  for (Index j = 0; j < 12; ++j) {
    for (Index i = 0; i < 6; ++i) cols(i, j) = normal(rng);
    cols(j / 4, j) += 1.0;
    labels.push_back(std::to_string(j / 4));
  }
  const auto train = make_dataset(cols, labels);
  const auto hp = params(0.01, 0.1, 0.5, 5.0 / 12.0);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(6);
  x[0] = 1.0;
  x[1] = 0.3;
  const LdsrClassifier clf(train, hp);
  const auto set = clf.select_locality(x);
  ASSERT_EQ(set.surviving_classes.size(), 2u);
  const auto fit = clf.fit_locality(x);
  // Independent route: solve over the materialized subset, whose class count
  // is the surviving count.
  const auto direct = solve(set.subset, x, hp);
  EXPECT_LE((fit.beta - direct.coeffs).lpNorm<Eigen::Infinity>(), 1e-10);
  // With M = 3 the between-class factor would be active and change beta.
  const Eigen::MatrixXd g = set.subset.features.transpose() * set.subset.features;
  auto blocks = build_blocks(set.subset);
  blocks.h1.push_back(Eigen::MatrixXd(0, 0));
  blocks.h2.push_back(Eigen::MatrixXd(0, 0));
  blocks.class_offsets.push_back(blocks.class_offsets.back());
  const Eigen::VectorXd beta3 =
      assemble_system(g, blocks, hp).ldlt().solve(set.subset.features.transpose() * x);
  EXPECT_GT((beta3 - fit.beta).lpNorm<Eigen::Infinity>(), 1e-6);

  const auto decision = clf.classify(x);
  const int missing = 3 - set.surviving_classes[0] - set.surviving_classes[1];
  EXPECT_EQ(decision.scores[missing], kInf);
  EXPECT_NE(decision.predicted, missing);
  EXPECT_EQ(decision.predicted, 0);
}

TEST(Ldsr, OneSamplePerClassRecoversTheSample) {
  std::mt19937_64 rng(6);
  const auto inst = oracle::random_instance(rng, 10, {1, 1, 1, 1});
  const auto hp = params(1e-6, 1e-3, 1e-3, 1.0);
  for (int c = 0; c < 4; ++c) {
    EXPECT_EQ(classify(inst.train, inst.train.features.col(c), hp).predicted, c);
  }
}

TEST(Ldsr, DeterministicDecisions) {
  std::mt19937_64 rng(7);
  const auto inst = oracle::random_instance(rng, 9, {4, 4, 4});
  const auto hp = params(0.1, 0.1, 0.1, 0.5);
  EXPECT_EQ(classify(inst.train, inst.query, hp), classify(inst.train, inst.query, hp));
}

TEST(Ldsr, BatchConsistency) {
  std::mt19937_64 rng(8);
  const auto inst = oracle::random_instance(rng, 9, {4, 5, 3});
  const auto hp = params(0.1, 0.1, 0.1, 0.5);
  const Eigen::MatrixXd queries = oracle::gaussian_matrix(rng, 9, 6);
  const LdsrClassifier clf(inst.train, hp);

  const auto batch = clf.classify_batch(queries, 3);
  ASSERT_EQ(batch.size(), 6u);
  for (Index j = 0; j < 6; ++j) expect_same_decision(batch[j], clf.classify(queries.col(j)));
  EXPECT_EQ(clf.classify_batch(queries, 1), batch);

  std::vector<Index> perm{3, 0, 5, 1, 4, 2};
  Eigen::MatrixXd permuted(9, 6);
  for (Index j = 0; j < 6; ++j) permuted.col(j) = queries.col(perm[j]);
  const auto shuffled = classify_batch(inst.train, permuted, hp, 2);
  for (Index j = 0; j < 6; ++j) expect_same_decision(shuffled[j], batch[perm[j]]);

  EXPECT_TRUE(clf.classify_batch(Eigen::MatrixXd(9, 0)).empty());
  EXPECT_THROW(clf.classify_batch(Eigen::MatrixXd::Zero(8, 2)), Error);
}

TEST(Ldsr, BatchSpanningSeveralChunks) {
  std::mt19937_64 rng(9);
  const auto inst = oracle::random_instance(rng, 6, {5, 5});
  const auto hp = params(0.1, 0.1, 0.1, 0.4);
  const Eigen::MatrixXd queries = oracle::gaussian_matrix(rng, 6, 600);
  const LdsrClassifier clf(inst.train, hp);
  const auto batch = clf.classify_batch(queries, 4);
  ASSERT_EQ(batch.size(), 600u);
  for (Index j : {0, 255, 256, 511, 512, 599}) {
    expect_same_decision(batch[j], clf.classify(queries.col(j)));
  }
}
