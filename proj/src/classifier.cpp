#include "dsr/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "dsr/error.hpp"
#include "dsr/parallel.hpp"

namespace dsr {

ClassDecision decide(std::vector<double> scores) {
  ClassDecision d;
  d.ranking.resize(scores.size());
  std::iota(d.ranking.begin(), d.ranking.end(), 0);
  std::stable_sort(d.ranking.begin(), d.ranking.end(),
                   [&](int a, int b) { return scores[a] < scores[b]; });
  if (scores.empty() || !std::isfinite(scores[d.ranking.front()])) {
    throw Error(ErrorCode::AllScoresInfinite,
                "no class received a finite score");
  }
  d.predicted = d.ranking.front();
  d.scores = std::move(scores);
  return d;
}

double regularized_residual(double residual_norm, double coeff_norm) {
  if (coeff_norm == 0.0) return std::numeric_limits<double>::infinity();
  return residual_norm / coeff_norm;
}

Index locality_size(Index total, double fraction) {
  const auto s = static_cast<Index>(std::llround(fraction * static_cast<double>(total)));
  return std::clamp<Index>(s, 1, std::max<Index>(total, 1));
}

std::vector<Index> select_smallest(std::span<const double> distances,
                                   Index count) {
  const auto n = static_cast<Index>(distances.size());
  count = std::clamp<Index>(count, 0, n);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  auto closer = [&](Index a, Index b) {
    return distances[a] < distances[b] || (distances[a] == distances[b] && a < b);
  };
  std::nth_element(order.begin(), order.begin() + count, order.end(), closer);
  order.resize(static_cast<std::size_t>(count));
  std::sort(order.begin(), order.end());
  return order;
}

void Classifier::check_queries(const Eigen::MatrixXd& queries) const {
  if (queries.cols() > 0 && queries.rows() != train().dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                "queries have dimension " + std::to_string(queries.rows()) +
                    ", training data has " + std::to_string(train().dim()));
  }
}

std::vector<ClassDecision> Classifier::classify_batch(
    const Eigen::MatrixXd& queries, unsigned threads) const {
  check_queries(queries);
  std::vector<ClassDecision> out(static_cast<std::size_t>(queries.cols()));
  parallel_for(out.size(), threads, [&](std::size_t i) {
    out[i] = classify(queries.col(static_cast<Index>(i)));
  });
  return out;
}

}  // namespace dsr
