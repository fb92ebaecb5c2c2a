#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "dsr/dataset.hpp"

namespace dsr {

/// Per-class scores (smaller is better; +inf marks a class that could not be
/// scored), the winning class, and all classes sorted by score.
struct ClassDecision {
  std::vector<double> scores;
  int predicted = -1;
  std::vector<int> ranking;

  bool operator==(const ClassDecision&) const = default;
};

/// Argmin with ties resolved toward the lower class id. Throws
/// AllScoresInfinite when no class has a finite score.
ClassDecision decide(std::vector<double> scores);

/// Per-class regularized residual ||t - D_c b_c|| / ||b_c||, with +inf when
/// b_c vanishes.
double regularized_residual(double residual_norm, double coeff_norm);

/// Number of samples kept by the locality stage: max(1, round(f * L)).
Index locality_size(Index total, double fraction);

/// Indices of the `count` smallest distances, ties toward the lower index,
/// returned in ascending index order.
std::vector<Index> select_smallest(std::span<const double> distances,
                                   Index count);

class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual ClassDecision classify(const Eigen::VectorXd& x) const = 0;
  virtual const ClassPartitionedDataset& train() const = 0;

  /// Classifies every column of `queries`; result i belongs to column i.
  /// Results do not depend on `threads`.
  virtual std::vector<ClassDecision> classify_batch(
      const Eigen::MatrixXd& queries, unsigned threads = 1) const;

 protected:
  /// Batched overrides process queries in fixed chunks of this many columns,
  /// so chunk boundaries never depend on the thread count.
  static constexpr Index kBatchChunk = 256;

  /// Throws DimensionMismatch unless `queries` is empty or matches train().
  void check_queries(const Eigen::MatrixXd& queries) const;
};

}  // namespace dsr
