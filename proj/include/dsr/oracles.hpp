#pragma once

// Reference computations that deliberately avoid the production code paths:
// explicit zeroed-column loops, literal term-by-term sums, finite
// differences and alternative factorizations. They back the unit tests, the
// acceptance suite and the `selftest` command.

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dsr/dataset.hpp"
#include "dsr/solver.hpp"

namespace dsr::oracle {

/// sum_i Dbar_i^T Dbar_i where Dbar_i is `block` with column i set to zero.
Eigen::MatrixXd explicit_within_block(const Eigen::MatrixXd& block);

/// The discriminant objective evaluated as literal nested sums.
double literal_objective(const Eigen::MatrixXd& design,
                         std::span<const Index> class_offsets,
                         const Eigen::VectorXd& target,
                         const Eigen::VectorXd& alpha, const HyperParams& hp);

/// Central differences of f at `at` with step h.
Eigen::VectorXd central_difference(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& at, double h);

/// Ridge solution (D^T D + lambda I)^{-1} D^T t through a QR factorization
/// of the stacked system [D; sqrt(lambda) I].
Eigen::VectorXd ridge_by_qr(const Eigen::MatrixXd& design,
                            const Eigen::VectorXd& target, double lambda);

/// Least-squares residual of x against span(block) via normal equations.
double normal_equations_residual(const Eigen::MatrixXd& block,
                                 const Eigen::VectorXd& x);

/// Random linear instance: Gaussian features, one Gaussian query.
struct Instance {
  ClassPartitionedDataset train;
  Eigen::VectorXd query;
};

Instance random_instance(std::mt19937_64& rng, Index dim,
                         const std::vector<Index>& class_sizes);

Eigen::MatrixXd gaussian_matrix(std::mt19937_64& rng, Index rows, Index cols);

struct Check {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  bool passed() const { return residual <= tolerance; }
};

struct SelftestOptions {
  std::uint64_t seed = 1;
  int instances = 50;
  /// Test hook: perturbs the analytic gradient so the checks must fail.
  bool corrupt_gradient = false;
};

std::vector<Check> run_selftest(const SelftestOptions& options);

}  // namespace dsr::oracle
