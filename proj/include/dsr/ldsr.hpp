#pragma once

#include <vector>

#include <Eigen/Core>

#include "dsr/classifier.hpp"
#include "dsr/dataset.hpp"
#include "dsr/solver.hpp"

namespace dsr {

/// The s training columns closest to the query under the first-stage
/// residual distance.
struct LocalitySet {
  std::vector<Index> selected_indices;  // ascending training-column indices
  ClassPartitionedDataset subset;
  std::vector<int> surviving_classes;   // training class ids present in subset
};

/// Everything the second stage produced for one query.
struct LocalityFit {
  std::vector<Index> selected_indices;
  std::vector<int> surviving_classes;
  std::vector<Index> class_offsets;  // over surviving classes, into beta
  Eigen::VectorXd beta;
};

/// Second-stage solve restricted to `selected` (ascending training-column
/// indices). `sub_gram` and `sub_rhs` are the Gram matrix and right-hand side
/// of the selected atoms; the between-class factor uses the number of
/// classes that survived selection.
LocalityFit solve_locality(const Eigen::MatrixXd& sub_gram,
                           const Eigen::VectorXd& sub_rhs,
                           std::vector<Index> selected,
                           const std::vector<int>& train_labels,
                           const HyperParams& hp);

/// Two-stage locality-based discriminant sparse representation classifier.
///
/// Construction factorizes the first-stage system once; every query then
/// costs two triangular solves plus one dense solve of size s.
class LdsrClassifier final : public Classifier {
 public:
  LdsrClassifier(ClassPartitionedDataset train, HyperParams hp);

  const ClassPartitionedDataset& train() const override { return train_; }
  const HyperParams& params() const { return hp_; }

  /// First-stage solve over the full training set. Objective and gradient
  /// diagnostics are only filled when requested.
  CoefficientSolution first_stage(const Eigen::VectorXd& x,
                                  bool diagnostics = false) const;
  LocalitySet select_locality(const Eigen::VectorXd& x) const;
  LocalityFit fit_locality(const Eigen::VectorXd& x) const;
  ClassDecision classify(const Eigen::VectorXd& x) const override;
  /// Shares the first-stage products across chunks of queries. Agrees with
  /// classify() up to floating-point reassociation.
  std::vector<ClassDecision> classify_batch(const Eigen::MatrixXd& queries,
                                            unsigned threads = 1) const override;

 private:
  // rhs = X^T x and alpha = first-stage coefficients for the same query.
  std::vector<Index> locality_indices(double x_sq_norm, const Eigen::VectorXd& rhs,
                                      const Eigen::VectorXd& alpha) const;
  LocalityFit fit_from(double x_sq_norm, const Eigen::VectorXd& rhs,
                       const Eigen::VectorXd& alpha) const;
  ClassDecision score(const Eigen::VectorXd& x, const LocalityFit& fit) const;

  ClassPartitionedDataset train_;
  HyperParams hp_;
  Eigen::MatrixXd gram_;  // X^T X
  DiscriminantSystem stage_one_;
};

LocalitySet select_locality(const ClassPartitionedDataset& train,
                            const Eigen::VectorXd& x, const HyperParams& hp);

ClassDecision classify(const ClassPartitionedDataset& train,
                       const Eigen::VectorXd& x, const HyperParams& hp);

std::vector<ClassDecision> classify_batch(const ClassPartitionedDataset& train,
                                          const Eigen::MatrixXd& queries,
                                          const HyperParams& hp,
                                          unsigned threads = 1);

}  // namespace dsr
