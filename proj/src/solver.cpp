#include "dsr/solver.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "dsr/error.hpp"

namespace dsr {

namespace {

int class_count(std::span<const Index> offsets) {
  return static_cast<int>(offsets.size()) - 1;
}

void check_layout(const Eigen::MatrixXd& design,
                  std::span<const Index> offsets,
                  const Eigen::VectorXd& target) {
  if (offsets.size() < 2 || offsets.front() != 0 ||
      offsets.back() != design.cols()) {
    throw Error(ErrorCode::DimensionMismatch,
                "class offsets do not cover the design columns");
  }
  if (target.size() != design.rows()) {
    throw Error(ErrorCode::DimensionMismatch,
                "query has dimension " + std::to_string(target.size()) +
                    ", training data has " + std::to_string(design.rows()));
  }
}

void check_coeffs(const Eigen::MatrixXd& design, const Eigen::VectorXd& alpha) {
  if (alpha.size() != design.cols()) {
    throw Error(ErrorCode::DimensionMismatch,
                "coefficient vector has length " + std::to_string(alpha.size()) +
                    ", expected " + std::to_string(design.cols()));
  }
}

}  // namespace

void HyperParams::validate() const {
  auto bad = [](const char* field, const std::string& why) {
    throw Error(ErrorCode::InvalidArgument, std::string(field) + " " + why);
  };
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) bad("lambda", "must be >= 0");
  if (!(eta >= 0.0) || !std::isfinite(eta)) bad("eta", "must be >= 0");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) bad("gamma", "must be >= 0");
  if (!(locality_fraction > 0.0 && locality_fraction <= 1.0)) {
    bad("locality_fraction", "must lie in (0, 1]");
  }
  if (sigma && !(*sigma > 0.0 && std::isfinite(*sigma))) {
    bad("sigma", "must be > 0");
  }
}

Eigen::MatrixXd RegularizerBlocks::dense_h1() const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(size(), size());
  for (int c = 0; c < num_classes(); ++c) {
    out.block(class_offsets[c], class_offsets[c], h1[c].rows(), h1[c].cols()) =
        h1[c];
  }
  return out;
}

Eigen::MatrixXd RegularizerBlocks::dense_h2() const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(size(), size());
  for (int c = 0; c < num_classes(); ++c) {
    out.block(class_offsets[c], class_offsets[c], h2[c].rows(), h2[c].cols()) =
        h2[c];
  }
  return out;
}

Eigen::VectorXd RegularizerBlocks::apply_h1(const Eigen::VectorXd& v) const {
  Eigen::VectorXd out(v.size());
  for (int c = 0; c < num_classes(); ++c) {
    const auto n = h1[c].rows();
    out.segment(class_offsets[c], n) = h1[c] * v.segment(class_offsets[c], n);
  }
  return out;
}

Eigen::VectorXd RegularizerBlocks::apply_h2(const Eigen::VectorXd& v) const {
  Eigen::VectorXd out(v.size());
  for (int c = 0; c < num_classes(); ++c) {
    const auto n = h2[c].rows();
    out.segment(class_offsets[c], n) = h2[c] * v.segment(class_offsets[c], n);
  }
  return out;
}

RegularizerBlocks build_blocks_from_gram(const Eigen::MatrixXd& gram,
                                         std::span<const Index> class_offsets) {
  if (gram.rows() != gram.cols() || class_offsets.size() < 2 ||
      class_offsets.back() != gram.rows()) {
    throw Error(ErrorCode::DimensionMismatch,
                "gram matrix does not match class offsets");
  }
  RegularizerBlocks blocks;
  blocks.class_offsets.assign(class_offsets.begin(), class_offsets.end());
  const int m = class_count(class_offsets);
  blocks.h1.reserve(m);
  blocks.h2.reserve(m);
  for (int c = 0; c < m; ++c) {
    const Index start = class_offsets[c];
    const Index n = class_offsets[c + 1] - start;
    Eigen::MatrixXd g = gram.block(start, start, n, n);
    Eigen::MatrixXd h1 = static_cast<double>(n - 2) * g;
    h1.diagonal() += g.diagonal();
    blocks.h1.push_back(std::move(h1));
    blocks.h2.push_back(std::move(g));
  }
  return blocks;
}

RegularizerBlocks build_blocks(const ClassPartitionedDataset& train) {
  const Index m = train.num_classes();
  RegularizerBlocks blocks;
  blocks.class_offsets = train.class_offsets;
  blocks.h1.reserve(m);
  blocks.h2.reserve(m);
  for (int c = 0; c < m; ++c) {
    const auto xc = train.class_block(c);
    Eigen::MatrixXd g = xc.transpose() * xc;
    Eigen::MatrixXd h1 = static_cast<double>(xc.cols() - 2) * g;
    h1.diagonal() += g.diagonal();
    blocks.h1.push_back(std::move(h1));
    blocks.h2.push_back(std::move(g));
  }
  return blocks;
}

Eigen::MatrixXd assemble_system(const Eigen::MatrixXd& gram,
                                const RegularizerBlocks& blocks,
                                const HyperParams& hp) {
  if (gram.rows() != blocks.size() || gram.cols() != blocks.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "gram matrix does not match regularizer blocks");
  }
  const double between = 2.0 * hp.gamma * (blocks.num_classes() - 2);
  Eigen::MatrixXd a = (1.0 + 2.0 * hp.gamma) * gram;
  a.diagonal().array() += hp.lambda;
  for (int c = 0; c < blocks.num_classes(); ++c) {
    const Index start = blocks.class_offsets[c];
    const Index n = blocks.h1[c].rows();
    a.block(start, start, n, n) += hp.eta * blocks.h1[c] + between * blocks.h2[c];
  }
  return a;
}

DiscriminantSystem::DiscriminantSystem(const Eigen::MatrixXd& gram,
                                       std::vector<Index> class_offsets,
                                       const HyperParams& hp)
    : DiscriminantSystem(gram, build_blocks_from_gram(gram, class_offsets), hp) {}

DiscriminantSystem::DiscriminantSystem(const Eigen::MatrixXd& gram,
                                       const RegularizerBlocks& blocks,
                                       const HyperParams& hp)
    : matrix_(assemble_system(gram, blocks, hp)) {
  factorize();
}

void DiscriminantSystem::factorize() {
  const auto n = matrix_.rows();
  Eigen::LLT<Eigen::MatrixXd> llt(matrix_);
  const double eps = std::numeric_limits<double>::epsilon();
  if (llt.info() == Eigen::Success && llt.rcond() > static_cast<double>(n) * eps) {
    factor_ = std::move(llt);
    return;
  }
  // Roundoff can break Cholesky on a numerically semi-definite matrix; the
  // pivoted decomposition tells a near miss from a genuinely singular system.
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(matrix_);
  if (cod.rank() < n) {
    throw Error(ErrorCode::SingularSystem,
                "system matrix has rank " + std::to_string(cod.rank()) +
                    " < " + std::to_string(n) + "; use lambda > 0");
  }
  factor_ = std::move(cod);
}

Eigen::VectorXd DiscriminantSystem::solve(const Eigen::VectorXd& rhs) const {
  if (rhs.size() != matrix_.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "right-hand side length mismatch");
  }
  return std::visit([&](const auto& f) -> Eigen::VectorXd { return f.solve(rhs); },
                    factor_);
}

Eigen::MatrixXd DiscriminantSystem::solve_many(const Eigen::MatrixXd& rhs) const {
  if (rhs.rows() != matrix_.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "right-hand side length mismatch");
  }
  return std::visit([&](const auto& f) -> Eigen::MatrixXd { return f.solve(rhs); },
                    factor_);
}

double objective(const Eigen::MatrixXd& design,
                 std::span<const Index> class_offsets,
                 const Eigen::VectorXd& target, const Eigen::VectorXd& alpha,
                 const HyperParams& hp) {
  check_layout(design, class_offsets, target);
  check_coeffs(design, alpha);
  const int m = class_count(class_offsets);

  // Per-class reconstructions D_c a_c.
  Eigen::MatrixXd recon(design.rows(), m);
  for (int c = 0; c < m; ++c) {
    const Index start = class_offsets[c];
    const Index n = class_offsets[c + 1] - start;
    recon.col(c) = design.middleCols(start, n) * alpha.segment(start, n);
  }

  double value = (target - recon.rowwise().sum()).squaredNorm();
  value += hp.lambda * alpha.squaredNorm();

  double within = 0.0;
  for (int c = 0; c < m; ++c) {
    for (Index i = class_offsets[c]; i < class_offsets[c + 1]; ++i) {
      within += (design.col(i) * alpha[i] - recon.col(c)).squaredNorm();
    }
  }
  value += hp.eta * within;

  double between = 0.0;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      if (i != j) between += (recon.col(i) + recon.col(j)).squaredNorm();
    }
  }
  value += hp.gamma * between;
  return value;
}

Eigen::VectorXd gradient(const Eigen::MatrixXd& design,
                         std::span<const Index> class_offsets,
                         const Eigen::VectorXd& target,
                         const Eigen::VectorXd& alpha, const HyperParams& hp) {
  check_layout(design, class_offsets, target);
  check_coeffs(design, alpha);
  const int m = class_count(class_offsets);

  const Eigen::VectorXd fit = design * alpha;
  Eigen::VectorXd grad = -2.0 * design.transpose() * (target - fit);
  grad += 2.0 * hp.lambda * alpha;
  grad += 4.0 * hp.gamma * (design.transpose() * fit);

  // Block terms: h1 a_c = (N_c - 2) D_c^T D_c a_c + diag(D_c^T D_c) a_c and
  // h2 a_c = D_c^T D_c a_c, applied without forming the blocks.
  for (int c = 0; c < m; ++c) {
    const Index start = class_offsets[c];
    const Index n = class_offsets[c + 1] - start;
    const auto dc = design.middleCols(start, n);
    const auto ac = alpha.segment(start, n);
    const Eigen::VectorXd gc_ac = dc.transpose() * (dc * ac);
    const Eigen::VectorXd diag_ac =
        dc.colwise().squaredNorm().transpose().cwiseProduct(ac);
    grad.segment(start, n) +=
        2.0 * hp.eta * (static_cast<double>(n - 2) * gc_ac + diag_ac) +
        4.0 * hp.gamma * (m - 2) * gc_ac;
  }
  return grad;
}

double objective(const ClassPartitionedDataset& train, const Eigen::VectorXd& x,
                 const Eigen::VectorXd& alpha, const HyperParams& hp) {
  return objective(train.features, train.class_offsets, x, alpha, hp);
}

Eigen::VectorXd gradient(const ClassPartitionedDataset& train,
                         const Eigen::VectorXd& x, const Eigen::VectorXd& alpha,
                         const HyperParams& hp) {
  return gradient(train.features, train.class_offsets, x, alpha, hp);
}

CoefficientSolution solve(const Eigen::MatrixXd& design,
                          std::span<const Index> class_offsets,
                          const Eigen::VectorXd& target, const HyperParams& hp) {
  hp.validate();
  check_layout(design, class_offsets, target);
  const Eigen::MatrixXd gram = design.transpose() * design;
  const DiscriminantSystem system(
      gram, std::vector<Index>(class_offsets.begin(), class_offsets.end()), hp);

  CoefficientSolution sol;
  sol.coeffs = system.solve(design.transpose() * target);
  sol.class_offsets.assign(class_offsets.begin(), class_offsets.end());
  sol.objective = objective(design, class_offsets, target, sol.coeffs, hp);
  sol.grad_inf_norm =
      gradient(design, class_offsets, target, sol.coeffs, hp).lpNorm<Eigen::Infinity>();
  return sol;
}

CoefficientSolution solve(const ClassPartitionedDataset& train,
                          const Eigen::VectorXd& x, const HyperParams& hp) {
  return solve(train.features, train.class_offsets, x, hp);
}

Eigen::VectorXd residual_distances(const ClassPartitionedDataset& train,
                                   const Eigen::VectorXd& x,
                                   const CoefficientSolution& sol) {
  if (x.size() != train.dim() || sol.coeffs.size() != train.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "query or coefficients do not match the training set");
  }
  Eigen::VectorXd d(train.size());
  for (Index i = 0; i < train.size(); ++i) {
    d[i] = (x - train.features.col(i) * sol.coeffs[i]).norm();
  }
  return d;
}

}  // namespace dsr
