#include "dsr/dictlearn.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "dsr/error.hpp"
#include "dsr/parallel.hpp"
#include "dsr/random.hpp"

namespace dsr {

namespace {

constexpr double kAtomStabilizer = 1e-12;

Eigen::MatrixXd code_step(const Eigen::MatrixXd& block,
                          const Eigen::MatrixXd& atoms, double tau) {
  if (tau > 0.0) {
    Eigen::MatrixXd g = atoms.transpose() * atoms;
    g.diagonal().array() += tau;
    return g.llt().solve(atoms.transpose() * block);
  }
  // Unpenalized codes: minimum-norm least squares copes with dependent atoms.
  return atoms.completeOrthogonalDecomposition().solve(block);
}

Eigen::MatrixXd atom_step(const Eigen::MatrixXd& block,
                          const Eigen::MatrixXd& codes) {
  Eigen::MatrixXd g = codes * codes.transpose();
  g.diagonal().array() += kAtomStabilizer;
  return g.ldlt().solve(codes * block.transpose()).transpose();
}

}  // namespace

double dictionary_objective(const Eigen::MatrixXd& block,
                            const Eigen::MatrixXd& atoms,
                            const Eigen::MatrixXd& codes, double tau) {
  return (block - atoms * codes).squaredNorm() + tau * codes.squaredNorm();
}

ClassDictionary learn_dictionary(const Eigen::MatrixXd& block,
                                 const DictionaryOptions& options) {
  const Index n = block.cols();
  if (options.atoms < 1 || options.atoms > n) {
    throw Error(ErrorCode::InvalidAtomCount,
                "need 1 <= atoms <= " + std::to_string(n) + ", got " +
                    std::to_string(options.atoms));
  }
  if (!(options.tau >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "tau must be >= 0");
  }
  if (options.iters < 1) {
    throw Error(ErrorCode::InvalidArgument, "iters must be >= 1");
  }

  std::vector<Index> cols(static_cast<std::size_t>(n));
  std::iota(cols.begin(), cols.end(), Index{0});
  std::mt19937_64 rng(options.seed);
  partial_shuffle(cols, static_cast<std::size_t>(options.atoms), rng);

  ClassDictionary dict;
  dict.tau = options.tau;
  dict.atoms.resize(block.rows(), options.atoms);
  for (Index j = 0; j < options.atoms; ++j) dict.atoms.col(j) = block.col(cols[j]);

  dict.codes = code_step(block, dict.atoms, options.tau);
  dict.objective_history.push_back(
      dictionary_objective(block, dict.atoms, dict.codes, options.tau));
  for (int it = 0; it < options.iters; ++it) {
    dict.atoms = atom_step(block, dict.codes);
    dict.codes = code_step(block, dict.atoms, options.tau);
    dict.objective_history.push_back(
        dictionary_objective(block, dict.atoms, dict.codes, options.tau));
  }

  for (Index j = 0; j < dict.atoms.cols(); ++j) {
    const double norm = dict.atoms.col(j).norm();
    if (norm > 0.0) {
      dict.atoms.col(j) /= norm;
      dict.codes.row(j) *= norm;
    }
  }
  dict.final_objective =
      dictionary_objective(block, dict.atoms, dict.codes, options.tau);
  return dict;
}

ClassPartitionedDataset compact_dataset(const ClassPartitionedDataset& train,
                                        const DictionaryOptions& options,
                                        unsigned threads) {
  const int m = train.num_classes();
  std::vector<ClassDictionary> dicts(static_cast<std::size_t>(m));
  parallel_for(dicts.size(), threads, [&](std::size_t c) {
    auto opts = options;
    opts.seed = options.seed + c;
    dicts[c] = learn_dictionary(train.class_block(static_cast<int>(c)), opts);
  });

  ClassPartitionedDataset out;
  out.class_names = train.class_names;
  out.features.resize(train.dim(), options.atoms * m);
  out.class_offsets.push_back(0);
  for (int c = 0; c < m; ++c) {
    const auto start = out.class_offsets.back();
    out.features.middleCols(start, options.atoms) = dicts[c].atoms;
    for (Index j = 0; j < options.atoms; ++j) {
      out.labels.push_back(c);
      out.source_index.push_back(start + j);
    }
    out.class_offsets.push_back(start + options.atoms);
  }
  out.validate(1);
  return out;
}

}  // namespace dsr
