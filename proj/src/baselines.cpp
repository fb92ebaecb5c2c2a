#include "dsr/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dsr/error.hpp"

namespace dsr {

namespace {

void check_query(const ClassPartitionedDataset& train, const Eigen::VectorXd& x) {
  if (x.size() != train.dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                "query has dimension " + std::to_string(x.size()) +
                    ", training data has " + std::to_string(train.dim()));
  }
}

}  // namespace

CrcClassifier::CrcClassifier(ClassPartitionedDataset train, double lambda)
    : train_(std::move(train)) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::InvalidArgument, "lambda must be > 0 for CRC");
  }
  Eigen::MatrixXd a = train_.features.transpose() * train_.features;
  a.diagonal().array() += lambda;
  factor_.compute(a);
  if (factor_.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularSystem, "CRC system is not positive definite");
  }
}

Eigen::VectorXd CrcClassifier::coefficients(const Eigen::VectorXd& x) const {
  check_query(train_, x);
  return factor_.solve(train_.features.transpose() * x);
}

ClassDecision CrcClassifier::classify(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd alpha = coefficients(x);
  std::vector<double> scores(static_cast<std::size_t>(train_.num_classes()));
  for (int c = 0; c < train_.num_classes(); ++c) {
    const auto ac = alpha.segment(train_.class_offsets[c], train_.class_size(c));
    scores[c] = regularized_residual((x - train_.class_block(c) * ac).norm(),
                                     ac.norm());
  }
  return decide(std::move(scores));
}

std::vector<ClassDecision> CrcClassifier::classify_batch(
    const Eigen::MatrixXd& queries, unsigned /*threads*/) const {
  check_queries(queries);
  const int m = train_.num_classes();
  std::vector<ClassDecision> out;
  out.reserve(static_cast<std::size_t>(queries.cols()));
  for (Index start = 0; start < queries.cols(); start += kBatchChunk) {
    const Index width = std::min(kBatchChunk, queries.cols() - start);
    const auto chunk = queries.middleCols(start, width);
    const Eigen::MatrixXd alpha = factor_.solve(train_.features.transpose() * chunk);
    // Row c: residual norms, then coefficient norms, of class c per query.
    Eigen::MatrixXd residual(m, width);
    Eigen::MatrixXd coeff(m, width);
    for (int c = 0; c < m; ++c) {
      const auto ac = alpha.middleRows(train_.class_offsets[c], train_.class_size(c));
      residual.row(c) = (chunk - train_.class_block(c) * ac).colwise().norm();
      coeff.row(c) = ac.colwise().norm();
    }
    for (Index j = 0; j < width; ++j) {
      std::vector<double> scores(static_cast<std::size_t>(m));
      for (int c = 0; c < m; ++c) scores[c] = regularized_residual(residual(c, j), coeff(c, j));
      out.push_back(decide(std::move(scores)));
    }
  }
  return out;
}

NscClassifier::NscClassifier(ClassPartitionedDataset train)
    : train_(std::move(train)) {
  factors_.reserve(static_cast<std::size_t>(train_.num_classes()));
  for (int c = 0; c < train_.num_classes(); ++c) {
    factors_.emplace_back(Eigen::MatrixXd(train_.class_block(c)));
  }
}

ClassDecision NscClassifier::classify(const Eigen::VectorXd& x) const {
  check_query(train_, x);
  std::vector<double> scores(static_cast<std::size_t>(train_.num_classes()));
  for (int c = 0; c < train_.num_classes(); ++c) {
    const Eigen::VectorXd w = factors_[c].solve(x);
    scores[c] = (x - train_.class_block(c) * w).norm();
  }
  return decide(std::move(scores));
}

ClassDecision crc_classify(const ClassPartitionedDataset& train,
                           const Eigen::VectorXd& x, double lambda) {
  return CrcClassifier(train, lambda).classify(x);
}

ClassDecision nsc_classify(const ClassPartitionedDataset& train,
                           const Eigen::VectorXd& x) {
  return NscClassifier(train).classify(x);
}

}  // namespace dsr
