#pragma once

#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "dsr/classifier.hpp"
#include "dsr/dataset.hpp"
#include "dsr/ldsr.hpp"
#include "dsr/solver.hpp"

namespace dsr {

enum class KernelKind { Rbf, Linear };

KernelKind parse_kernel_kind(std::string_view name);
std::string_view to_string(KernelKind kind);

/// exp(-||x - y||^2 / sigma). Sigma divides the squared distance directly.
double rbf(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double sigma);

struct Kernel {
  KernelKind kind = KernelKind::Rbf;
  double sigma = 1.0;  // unused by the linear kernel

  double operator()(const Eigen::VectorXd& x, const Eigen::VectorXd& y) const;
};

/// Median of the squared distances over all training pairs i < j.
double median_heuristic(const ClassPartitionedDataset& train);

/// Resolves hp.sigma (empty means the median heuristic) into a kernel.
Kernel make_kernel(const ClassPartitionedDataset& train, KernelKind kind,
                   const HyperParams& hp);

struct KernelGram {
  Eigen::MatrixXd gram;  // L x L, K(i, j) = k(x_i, x_j)
  std::vector<Index> class_offsets;
  Kernel kernel;
};

struct QueryKernelVector {
  Eigen::VectorXd vec;  // k(x_i, x) for every training column
  double self_similarity = 1.0;
};

KernelGram build_gram(const ClassPartitionedDataset& train, const Kernel& kernel);

QueryKernelVector query_vector(const ClassPartitionedDataset& train,
                               const Eigen::VectorXd& x, const Kernel& kernel);

/// Discriminant solve with the Gram matrix standing in for the samples and
/// the query kernel vector for the query. Diagnostics refer to the kernel
/// objective ||k(., x) - K a||^2 + ... .
CoefficientSolution ksolve(const KernelGram& gram, const QueryKernelVector& kvec,
                           const HyperParams& hp);

/// Feature-space distance ||phi(x) - phi(x_i) a_i||, clamped at zero.
double kernel_distance(const ClassPartitionedDataset& train,
                       const Eigen::VectorXd& x, Index i, double alpha_i,
                       const Kernel& kernel);

/// Kernel variant of the two-stage classifier.
class KldsrClassifier final : public Classifier {
 public:
  KldsrClassifier(ClassPartitionedDataset train, HyperParams hp,
                  KernelKind kind = KernelKind::Rbf);

  const ClassPartitionedDataset& train() const override { return train_; }
  const Kernel& kernel() const { return gram_.kernel; }
  const KernelGram& gram() const { return gram_; }

  CoefficientSolution first_stage(const QueryKernelVector& kvec,
                                  bool diagnostics = false) const;
  /// Second stage over the locality Gram U and query vector u(., x).
  LocalityFit fit_locality(const Eigen::VectorXd& x) const;
  ClassDecision classify(const Eigen::VectorXd& x) const override;

 private:
  LocalityFit fit_locality(const QueryKernelVector& kvec) const;

  ClassPartitionedDataset train_;
  HyperParams hp_;
  KernelGram gram_;
  Eigen::MatrixXd gram_sq_;  // K^T K
  DiscriminantSystem stage_one_;
};

ClassDecision kclassify(const ClassPartitionedDataset& train,
                        const Eigen::VectorXd& x, const HyperParams& hp,
                        KernelKind kind = KernelKind::Rbf);

}  // namespace dsr
