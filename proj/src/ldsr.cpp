#include "dsr/ldsr.hpp"

#include <algorithm>
#include <limits>
#include <utility>

#include "dsr/error.hpp"
#include "dsr/parallel.hpp"

namespace dsr {

namespace {

Eigen::MatrixXd gather(const Eigen::MatrixXd& m, const std::vector<Index>& idx) {
  const auto n = static_cast<Index>(idx.size());
  Eigen::MatrixXd out(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) out(i, j) = m(idx[i], idx[j]);
  }
  return out;
}

Eigen::VectorXd gather(const Eigen::VectorXd& v, const std::vector<Index>& idx) {
  Eigen::VectorXd out(static_cast<Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<Index>(i)] = v[idx[i]];
  return out;
}

}  // namespace

LocalityFit solve_locality(const Eigen::MatrixXd& sub_gram,
                           const Eigen::VectorXd& sub_rhs,
                           std::vector<Index> selected,
                           const std::vector<int>& train_labels,
                           const HyperParams& hp) {
  LocalityFit fit;
  fit.class_offsets.push_back(0);
  for (std::size_t j = 0; j < selected.size(); ++j) {
    const int c = train_labels[selected[j]];
    if (fit.surviving_classes.empty() || fit.surviving_classes.back() != c) {
      if (!fit.surviving_classes.empty()) {
        fit.class_offsets.push_back(static_cast<Index>(j));
      }
      fit.surviving_classes.push_back(c);
    }
  }
  fit.class_offsets.push_back(static_cast<Index>(selected.size()));
  fit.selected_indices = std::move(selected);

  const DiscriminantSystem system(sub_gram, fit.class_offsets, hp);
  fit.beta = system.solve(sub_rhs);
  return fit;
}

LdsrClassifier::LdsrClassifier(ClassPartitionedDataset train, HyperParams hp)
    : train_(std::move(train)),
      hp_(hp),
      gram_((hp_.validate(), train_.features.transpose() * train_.features)),
      stage_one_(gram_, train_.class_offsets, hp_) {}

CoefficientSolution LdsrClassifier::first_stage(const Eigen::VectorXd& x,
                                                bool diagnostics) const {
  if (x.size() != train_.dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                "query has dimension " + std::to_string(x.size()) +
                    ", training data has " + std::to_string(train_.dim()));
  }
  CoefficientSolution sol;
  sol.coeffs = stage_one_.solve(train_.features.transpose() * x);
  sol.class_offsets = train_.class_offsets;
  if (diagnostics) {
    sol.objective = objective(train_, x, sol.coeffs, hp_);
    sol.grad_inf_norm =
        gradient(train_, x, sol.coeffs, hp_).lpNorm<Eigen::Infinity>();
  }
  return sol;
}

std::vector<Index> LdsrClassifier::locality_indices(
    double x_sq_norm, const Eigen::VectorXd& rhs, const Eigen::VectorXd& alpha) const {
  // ||x - x_i a_i||^2 = ||x||^2 - 2 a_i <x_i, x> + a_i^2 ||x_i||^2
  const Eigen::ArrayXd sq =
      x_sq_norm - 2.0 * alpha.array() * rhs.array() +
      alpha.array().square() * gram_.diagonal().array();
  const Eigen::VectorXd d = sq.max(0.0).sqrt().matrix();
  return select_smallest(std::span(d.data(), static_cast<std::size_t>(d.size())),
                         locality_size(train_.size(), hp_.locality_fraction));
}

LocalityFit LdsrClassifier::fit_from(double x_sq_norm, const Eigen::VectorXd& rhs,
                                     const Eigen::VectorXd& alpha) const {
  auto selected = locality_indices(x_sq_norm, rhs, alpha);
  const Eigen::MatrixXd sub_gram = gather(gram_, selected);
  const Eigen::VectorXd sub_rhs = gather(rhs, selected);
  return solve_locality(sub_gram, sub_rhs, std::move(selected), train_.labels, hp_);
}

LocalitySet LdsrClassifier::select_locality(const Eigen::VectorXd& x) const {
  const auto alpha = first_stage(x);
  LocalitySet set;
  set.selected_indices = locality_indices(
      x.squaredNorm(), train_.features.transpose() * x, alpha.coeffs);
  set.subset = select_columns(train_, set.selected_indices);
  for (auto idx : set.selected_indices) {
    const int c = train_.labels[idx];
    if (set.surviving_classes.empty() || set.surviving_classes.back() != c) {
      set.surviving_classes.push_back(c);
    }
  }
  return set;
}

LocalityFit LdsrClassifier::fit_locality(const Eigen::VectorXd& x) const {
  const auto alpha = first_stage(x);
  return fit_from(x.squaredNorm(), train_.features.transpose() * x, alpha.coeffs);
}

ClassDecision LdsrClassifier::score(const Eigen::VectorXd& x,
                                    const LocalityFit& fit) const {
  std::vector<double> scores(static_cast<std::size_t>(train_.num_classes()),
                             std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < fit.surviving_classes.size(); ++k) {
    const Index start = fit.class_offsets[k];
    const Index n = fit.class_offsets[k + 1] - start;
    const auto beta_c = fit.beta.segment(start, n);
    Eigen::VectorXd recon = Eigen::VectorXd::Zero(x.size());
    for (Index j = 0; j < n; ++j) {
      recon += train_.features.col(fit.selected_indices[start + j]) * beta_c[j];
    }
    scores[fit.surviving_classes[k]] =
        regularized_residual((x - recon).norm(), beta_c.norm());
  }
  return decide(std::move(scores));
}

ClassDecision LdsrClassifier::classify(const Eigen::VectorXd& x) const {
  return score(x, fit_locality(x));
}

std::vector<ClassDecision> LdsrClassifier::classify_batch(
    const Eigen::MatrixXd& queries, unsigned threads) const {
  check_queries(queries);
  std::vector<ClassDecision> out(static_cast<std::size_t>(queries.cols()));
  for (Index start = 0; start < queries.cols(); start += kBatchChunk) {
    const Index width = std::min(kBatchChunk, queries.cols() - start);
    const auto chunk = queries.middleCols(start, width);
    const Eigen::MatrixXd rhs = train_.features.transpose() * chunk;
    const Eigen::MatrixXd alpha = stage_one_.solve_many(rhs);
    parallel_for(static_cast<std::size_t>(width), threads, [&](std::size_t j) {
      const auto col = static_cast<Index>(j);
      const Eigen::VectorXd x = chunk.col(col);
      out[static_cast<std::size_t>(start) + j] =
          score(x, fit_from(x.squaredNorm(), rhs.col(col), alpha.col(col)));
    });
  }
  return out;
}

LocalitySet select_locality(const ClassPartitionedDataset& train,
                            const Eigen::VectorXd& x, const HyperParams& hp) {
  return LdsrClassifier(train, hp).select_locality(x);
}

ClassDecision classify(const ClassPartitionedDataset& train,
                       const Eigen::VectorXd& x, const HyperParams& hp) {
  return LdsrClassifier(train, hp).classify(x);
}

std::vector<ClassDecision> classify_batch(const ClassPartitionedDataset& train,
                                          const Eigen::MatrixXd& queries,
                                          const HyperParams& hp,
                                          unsigned threads) {
  return LdsrClassifier(train, hp).classify_batch(queries, threads);
}

}  // namespace dsr
