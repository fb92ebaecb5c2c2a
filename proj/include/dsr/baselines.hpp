#pragma once

#include <string_view>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/QR>

#include "dsr/classifier.hpp"
#include "dsr/dataset.hpp"

namespace dsr {

enum class BaselineKind { Crc, Nsc };

/// Collaborative representation: ridge coefficients over all classes,
/// scored by the per-class regularized residual.
class CrcClassifier final : public Classifier {
 public:
  CrcClassifier(ClassPartitionedDataset train, double lambda);

  const ClassPartitionedDataset& train() const override { return train_; }
  Eigen::VectorXd coefficients(const Eigen::VectorXd& x) const;
  ClassDecision classify(const Eigen::VectorXd& x) const override;
  /// Matrix-matrix form of classify(); equal up to floating-point
  /// reassociation.
  std::vector<ClassDecision> classify_batch(const Eigen::MatrixXd& queries,
                                            unsigned threads = 1) const override;

 private:
  ClassPartitionedDataset train_;
  Eigen::LLT<Eigen::MatrixXd> factor_;
};

/// Nearest subspace: per-class least squares, scored by the residual norm.
/// Rank-deficient class blocks use the minimum-norm solution.
class NscClassifier final : public Classifier {
 public:
  explicit NscClassifier(ClassPartitionedDataset train);

  const ClassPartitionedDataset& train() const override { return train_; }
  ClassDecision classify(const Eigen::VectorXd& x) const override;

 private:
  ClassPartitionedDataset train_;
  std::vector<Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>> factors_;
};

ClassDecision crc_classify(const ClassPartitionedDataset& train,
                           const Eigen::VectorXd& x, double lambda);

ClassDecision nsc_classify(const ClassPartitionedDataset& train,
                           const Eigen::VectorXd& x);

}  // namespace dsr
