#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "dsr/dataset.hpp"

namespace dsr {

/// Ridge-penalized dictionary for one class block:
///   min_{D, A} ||X - D A||_F^2 + tau ||A||_F^2
struct ClassDictionary {
  Eigen::MatrixXd atoms;  // q x k, unit-norm columns
  Eigen::MatrixXd codes;  // k x N
  double tau = 0.0;
  double final_objective = 0.0;
  /// Objective after the initial coding step and after every iteration.
  std::vector<double> objective_history;
};

struct DictionaryOptions {
  Index atoms = 50;
  double tau = 0.0;
  int iters = 30;
  std::uint64_t seed = 0;
  bool operator==(const DictionaryOptions&) const = default;
};

double dictionary_objective(const Eigen::MatrixXd& block,
                            const Eigen::MatrixXd& atoms,
                            const Eigen::MatrixXd& codes, double tau);

/// Alternating least squares started from `atoms` distinct seeded-random
/// columns of `block`.
ClassDictionary learn_dictionary(const Eigen::MatrixXd& block,
                                 const DictionaryOptions& options);

/// Replaces every class block by its learned atoms. Class c is seeded with
/// options.seed + c. Classes are learned on up to `threads` workers.
ClassPartitionedDataset compact_dataset(const ClassPartitionedDataset& train,
                                        const DictionaryOptions& options,
                                        unsigned threads = 1);

}  // namespace dsr
