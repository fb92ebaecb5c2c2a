#pragma once

#include <optional>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/QR>

#include "dsr/dataset.hpp"

namespace dsr {

struct HyperParams {
  double lambda = 1e-2;  // ridge weight
  double eta = 1e-3;     // within-class weight
  double gamma = 1e-3;   // between-class weight
  double locality_fraction = 0.3;
  /// RBF bandwidth; empty selects the median heuristic.
  std::optional<double> sigma;

  /// Throws dsr::Error(InvalidArgument) naming the offending field.
  void validate() const;

  bool operator==(const HyperParams&) const = default;
};

/// Block-diagonal within-class (h1) and between-class (h2) regularizers.
/// Block c has size N_c x N_c and is built from G_c = D_c^T D_c, where D_c
/// are the representation columns of class c:
///   h1[c] = sum_i Dbar_{c,i}^T Dbar_{c,i} = (N_c - 2) G_c + diag(G_c)
///   h2[c] = G_c
/// with Dbar_{c,i} equal to D_c with column i zeroed.
struct RegularizerBlocks {
  std::vector<Eigen::MatrixXd> h1;
  std::vector<Eigen::MatrixXd> h2;
  std::vector<Index> class_offsets;

  int num_classes() const { return static_cast<int>(h1.size()); }
  Index size() const { return class_offsets.back(); }
  Eigen::MatrixXd dense_h1() const;
  Eigen::MatrixXd dense_h2() const;
  /// y = h1 * v without forming the dense matrix.
  Eigen::VectorXd apply_h1(const Eigen::VectorXd& v) const;
  Eigen::VectorXd apply_h2(const Eigen::VectorXd& v) const;
};

RegularizerBlocks build_blocks(const ClassPartitionedDataset& train);

/// Same construction from a precomputed Gram matrix D^T D.
RegularizerBlocks build_blocks_from_gram(const Eigen::MatrixXd& gram,
                                         std::span<const Index> class_offsets);

/// System matrix of the stationarity condition
///   ((1 + 2 gamma) D^T D + lambda I + eta h1 + 2 gamma (M - 2) h2) alpha
///     = D^T target
/// with M = blocks.num_classes().
Eigen::MatrixXd assemble_system(const Eigen::MatrixXd& gram,
                                const RegularizerBlocks& blocks,
                                const HyperParams& hp);

/// Factorized system matrix. Immutable once built; solve() may be called
/// concurrently.
class DiscriminantSystem {
 public:
  DiscriminantSystem(const Eigen::MatrixXd& gram,
                     std::vector<Index> class_offsets, const HyperParams& hp);
  DiscriminantSystem(const Eigen::MatrixXd& gram, const RegularizerBlocks& blocks,
                     const HyperParams& hp);

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  /// Column-wise solve; one blocked triangular sweep for all columns.
  Eigen::MatrixXd solve_many(const Eigen::MatrixXd& rhs) const;

  const Eigen::MatrixXd& matrix() const { return matrix_; }
  /// False when the Cholesky factorization failed and the pivoted
  /// least-squares fallback is in use.
  bool used_cholesky() const {
    return std::holds_alternative<Eigen::LLT<Eigen::MatrixXd>>(factor_);
  }

 private:
  void factorize();

  Eigen::MatrixXd matrix_;
  std::variant<Eigen::LLT<Eigen::MatrixXd>,
               Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>>
      factor_;
};

struct CoefficientSolution {
  Eigen::VectorXd coeffs;
  std::vector<Index> class_offsets;
  double objective = 0.0;
  double grad_inf_norm = 0.0;

  auto block(int c) const {
    return coeffs.segment(class_offsets[c],
                          class_offsets[c + 1] - class_offsets[c]);
  }
};

// The objective and its gradient are written against a generic "design"
// matrix whose columns are the representation atoms and a target vector.
// Linear models use (X, x); the kernel model uses (K, k(., x)).

/// G(alpha) = ||t - D a||^2 + lambda ||a||^2
///          + eta   sum_c sum_i ||d_i^c a_i^c - D_c a_c||^2
///          + gamma sum_{i != j} ||D_i a_i + D_j a_j||^2
double objective(const Eigen::MatrixXd& design,
                 std::span<const Index> class_offsets,
                 const Eigen::VectorXd& target, const Eigen::VectorXd& alpha,
                 const HyperParams& hp);

Eigen::VectorXd gradient(const Eigen::MatrixXd& design,
                         std::span<const Index> class_offsets,
                         const Eigen::VectorXd& target,
                         const Eigen::VectorXd& alpha, const HyperParams& hp);

double objective(const ClassPartitionedDataset& train, const Eigen::VectorXd& x,
                 const Eigen::VectorXd& alpha, const HyperParams& hp);
Eigen::VectorXd gradient(const ClassPartitionedDataset& train,
                         const Eigen::VectorXd& x, const Eigen::VectorXd& alpha,
                         const HyperParams& hp);

/// Minimizes G for the given design and target; fills the diagnostics.
CoefficientSolution solve(const Eigen::MatrixXd& design,
                          std::span<const Index> class_offsets,
                          const Eigen::VectorXd& target, const HyperParams& hp);

CoefficientSolution solve(const ClassPartitionedDataset& train,
                          const Eigen::VectorXd& x, const HyperParams& hp);

/// d_i = ||x - x_i alpha_i|| for every training column i.
Eigen::VectorXd residual_distances(const ClassPartitionedDataset& train,
                                   const Eigen::VectorXd& x,
                                   const CoefficientSolution& sol);

/// Relative stationarity tolerance used for CoefficientSolution.
inline constexpr double kStationarityTol = 1e-8;

}  // namespace dsr
