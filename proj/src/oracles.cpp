#include "dsr/oracles.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "dsr/kernel.hpp"
#include "dsr/random.hpp"

namespace dsr::oracle {

Eigen::MatrixXd explicit_within_block(const Eigen::MatrixXd& block) {
  const Index n = block.cols();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    Eigen::MatrixXd zeroed = block;
    zeroed.col(i).setZero();
    sum += zeroed.transpose() * zeroed;
  }
  return sum;
}

double literal_objective(const Eigen::MatrixXd& design,
                         std::span<const Index> offsets,
                         const Eigen::VectorXd& target,
                         const Eigen::VectorXd& alpha, const HyperParams& hp) {
  const int m = static_cast<int>(offsets.size()) - 1;
  auto class_sum = [&](int c) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(design.rows());
    for (Index j = offsets[c]; j < offsets[c + 1]; ++j) v += design.col(j) * alpha[j];
    return v;
  };

  Eigen::VectorXd r = target;
  for (Index j = 0; j < design.cols(); ++j) r -= design.col(j) * alpha[j];
  double value = r.squaredNorm();

  double ridge = 0.0;
  for (Index j = 0; j < alpha.size(); ++j) ridge += alpha[j] * alpha[j];
  value += hp.lambda * ridge;

  double within = 0.0;
  for (int c = 0; c < m; ++c) {
    for (Index i = offsets[c]; i < offsets[c + 1]; ++i) {
      within += (design.col(i) * alpha[i] - class_sum(c)).squaredNorm();
    }
  }
  value += hp.eta * within;

  double between = 0.0;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      if (i == j) continue;
      between += (class_sum(i) + class_sum(j)).squaredNorm();
    }
  }
  value += hp.gamma * between;
  return value;
}

Eigen::VectorXd central_difference(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& at, double h) {
  Eigen::VectorXd g(at.size());
  for (Index i = 0; i < at.size(); ++i) {
    Eigen::VectorXd plus = at;
    Eigen::VectorXd minus = at;
    plus[i] += h;
    minus[i] -= h;
    g[i] = (f(plus) - f(minus)) / (2.0 * h);
  }
  return g;
}

Eigen::VectorXd ridge_by_qr(const Eigen::MatrixXd& design,
                            const Eigen::VectorXd& target, double lambda) {
  const Index n = design.cols();
  Eigen::MatrixXd stacked(design.rows() + n, n);
  stacked << design, std::sqrt(lambda) * Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(design.rows() + n);
  rhs.head(design.rows()) = target;
  return stacked.colPivHouseholderQr().solve(rhs);
}

double normal_equations_residual(const Eigen::MatrixXd& block,
                                 const Eigen::VectorXd& x) {
  const Eigen::VectorXd w =
      (block.transpose() * block).ldlt().solve(block.transpose() * x);
  return (x - block * w).norm();
}

Eigen::MatrixXd gaussian_matrix(std::mt19937_64& rng, Index rows, Index cols) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  }
  return m;
}

Instance random_instance(std::mt19937_64& rng, Index dim,
                         const std::vector<Index>& class_sizes) {
  Index total = 0;
  for (auto n : class_sizes) total += n;
  std::vector<std::string> labels;
  for (std::size_t c = 0; c < class_sizes.size(); ++c) {
    for (Index i = 0; i < class_sizes[c]; ++i) labels.push_back(std::to_string(c));
  }
  Instance inst;
  inst.train = make_dataset(gaussian_matrix(rng, dim, total), labels,
                            static_cast<int>(class_sizes.size()));
  inst.query = gaussian_matrix(rng, dim, 1).col(0);
  return inst;
}

namespace {

template <typename T>
T pick(std::mt19937_64& rng, std::initializer_list<T> options) {
  return *(options.begin() + uniform_below(rng, options.size()));
}

Index between(std::mt19937_64& rng, Index lo, Index hi) {
  return lo + static_cast<Index>(uniform_below(rng, static_cast<std::uint64_t>(hi - lo + 1)));
}

void record(std::vector<Check>& checks, const std::string& name, double residual,
            double tolerance) {
  for (auto& c : checks) {
    if (c.name == name) {
      c.residual = std::max(c.residual, residual);
      return;
    }
  }
  checks.push_back({name, residual, tolerance});
}

}  // namespace

std::vector<Check> run_selftest(const SelftestOptions& options) {
  std::mt19937_64 rng(options.seed);
  std::vector<Check> checks;
  // The corruption is large relative to any gradient it touches.
  auto corrupt = [&](Eigen::VectorXd& g) {
    if (options.corrupt_gradient) g[0] += 1e-3 * std::max(1.0, g.lpNorm<Eigen::Infinity>());
  };

  for (int t = 0; t < options.instances; ++t) {
    const Index q = between(rng, 5, 20);
    const Index m = between(rng, 2, 5);
    std::vector<Index> sizes;
    for (Index c = 0; c < m; ++c) sizes.push_back(between(rng, 1, 6));
    HyperParams hp;
    hp.lambda = pick(rng, {0.01, 1.0});
    hp.eta = pick(rng, {0.0, 0.1, 1.0});
    hp.gamma = pick(rng, {0.0, 0.1, 1.0});
    const auto inst = random_instance(rng, q, sizes);
    const auto& x = inst.train.features;
    const auto& offsets = inst.train.class_offsets;

    const auto sol = solve(inst.train, inst.query, hp);
    Eigen::VectorXd g = gradient(inst.train, inst.query, sol.coeffs, hp);
    corrupt(g);
    record(checks, "stationarity", g.lpNorm<Eigen::Infinity>() / (1.0 + std::abs(sol.objective)),
           kStationarityTol);

    const double literal = literal_objective(x, offsets, inst.query, sol.coeffs, hp);
    record(checks, "objective_vs_literal_sum",
           std::abs(sol.objective - literal) / (1.0 + std::abs(literal)), 1e-10);

    const Eigen::VectorXd probe = gaussian_matrix(rng, x.cols(), 1).col(0);
    const double h = 1e-6 * std::max(1.0, probe.lpNorm<Eigen::Infinity>());
    const auto fd = central_difference(
        [&](const Eigen::VectorXd& a) { return objective(inst.train, inst.query, a, hp); },
        probe, h);
    Eigen::VectorXd analytic = gradient(inst.train, inst.query, probe, hp);
    corrupt(analytic);
    record(checks, "gradient_vs_finite_difference",
           (fd - analytic).lpNorm<Eigen::Infinity>() / analytic.lpNorm<Eigen::Infinity>(),
           1e-5);

    auto ridge_hp = hp;
    ridge_hp.eta = 0.0;
    ridge_hp.gamma = 0.0;
    const auto ridge = solve(inst.train, inst.query, ridge_hp);
    record(checks, "ridge_reduction",
           (ridge.coeffs - ridge_by_qr(x, inst.query, hp.lambda)).lpNorm<Eigen::Infinity>(),
           1e-10);
  }

  for (Index n : {1, 2, 3, 5, 10}) {
    const Eigen::MatrixXd block = gaussian_matrix(rng, 8, n);
    std::vector<std::string> labels(static_cast<std::size_t>(n), "a");
    labels.push_back("b");
    Eigen::MatrixXd cols(8, n + 1);
    cols << block, gaussian_matrix(rng, 8, 1);
    const auto blocks = build_blocks(make_dataset(cols, labels));
    record(checks, "within_block_identity",
           (blocks.h1[0] - explicit_within_block(block)).lpNorm<Eigen::Infinity>(),
           1e-10);
  }

  {
    const auto inst = random_instance(rng, 10, {3, 4});
    HyperParams hp;
    hp.lambda = 0.5;
    hp.eta = 0.3;
    hp.gamma = 0.7;
    const Eigen::MatrixXd gram = inst.train.features.transpose() * inst.train.features;
    auto blocks = build_blocks(inst.train);
    const Eigen::MatrixXd reference = assemble_system(gram, blocks, hp);
    for (auto& b : blocks.h2) b = gaussian_matrix(rng, b.rows(), b.cols());
    record(checks, "two_class_between_term_inert",
           (assemble_system(gram, blocks, hp) - reference).lpNorm<Eigen::Infinity>(), 0.0);
  }

  for (int t = 0; t < options.instances; ++t) {
    const auto inst = random_instance(rng, between(rng, 4, 12),
                                      {between(rng, 1, 4), between(rng, 1, 4), between(rng, 1, 4)});
    HyperParams hp;
    hp.lambda = 0.1;
    hp.eta = 0.1;
    hp.gamma = 0.1;
    const auto kernel = make_kernel(inst.train, KernelKind::Rbf, hp);
    const auto gram = build_gram(inst.train, kernel);
    const auto kvec = query_vector(inst.train, inst.query, kernel);
    const auto sol = ksolve(gram, kvec, hp);
    Eigen::VectorXd g = gradient(gram.gram, gram.class_offsets, kvec.vec, sol.coeffs, hp);
    corrupt(g);
    record(checks, "kernel_stationarity",
           g.lpNorm<Eigen::Infinity>() / (1.0 + std::abs(sol.objective)), kStationarityTol);

    const Eigen::VectorXd probe = gaussian_matrix(rng, gram.gram.cols(), 1).col(0);
    const double h = 1e-6 * std::max(1.0, probe.lpNorm<Eigen::Infinity>());
    const auto fd = central_difference(
        [&](const Eigen::VectorXd& a) {
          return objective(gram.gram, gram.class_offsets, kvec.vec, a, hp);
        },
        probe, h);
    Eigen::VectorXd analytic = gradient(gram.gram, gram.class_offsets, kvec.vec, probe, hp);
    corrupt(analytic);
    record(checks, "kernel_gradient_vs_finite_difference",
           (fd - analytic).lpNorm<Eigen::Infinity>() / analytic.lpNorm<Eigen::Infinity>(),
           1e-5);
  }
  return checks;
}

}  // namespace dsr::oracle
