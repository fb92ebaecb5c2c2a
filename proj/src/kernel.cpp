#include "dsr/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dsr/error.hpp"

namespace dsr {

KernelKind parse_kernel_kind(std::string_view name) {
  if (name == "rbf") return KernelKind::Rbf;
  if (name == "linear") return KernelKind::Linear;
  throw Error(ErrorCode::InvalidArgument,
              "kernel must be rbf or linear, got '" + std::string(name) + "'");
}

std::string_view to_string(KernelKind kind) {
  return kind == KernelKind::Rbf ? "rbf" : "linear";
}

double rbf(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double sigma) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::DimensionMismatch, "rbf arguments differ in length");
  }
  if (!(sigma > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "sigma must be > 0");
  }
  return std::exp(-(x - y).squaredNorm() / sigma);
}

double Kernel::operator()(const Eigen::VectorXd& x,
                          const Eigen::VectorXd& y) const {
  if (kind == KernelKind::Linear) {
    if (x.size() != y.size()) {
      throw Error(ErrorCode::DimensionMismatch, "kernel arguments differ in length");
    }
    return x.dot(y);
  }
  return rbf(x, y, sigma);
}

double median_heuristic(const ClassPartitionedDataset& train) {
  const Index n = train.size();
  if (n < 2) {
    throw Error(ErrorCode::InsufficientSamples,
                "median heuristic needs at least two samples");
  }
  std::vector<double> d2;
  d2.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index j = 1; j < n; ++j) {
    for (Index i = 0; i < j; ++i) {
      d2.push_back((train.features.col(i) - train.features.col(j)).squaredNorm());
    }
  }
  const auto mid = d2.size() / 2;
  std::nth_element(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(mid), d2.end());
  double median = d2[mid];
  if (d2.size() % 2 == 0) {
    median = 0.5 * (median + *std::max_element(d2.begin(), d2.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  if (!(median > 0.0)) {
    throw Error(ErrorCode::InvalidArgument,
                "median pairwise distance is zero; set sigma explicitly");
  }
  return median;
}

Kernel make_kernel(const ClassPartitionedDataset& train, KernelKind kind,
                   const HyperParams& hp) {
  Kernel k{kind, 1.0};
  if (kind == KernelKind::Rbf) {
    k.sigma = hp.sigma ? *hp.sigma : median_heuristic(train);
  }
  return k;
}

KernelGram build_gram(const ClassPartitionedDataset& train, const Kernel& kernel) {
  const Index n = train.size();
  KernelGram g;
  g.gram.resize(n, n);
  g.class_offsets = train.class_offsets;
  g.kernel = kernel;
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i <= j; ++i) {
      const double v = kernel(train.features.col(i), train.features.col(j));
      g.gram(i, j) = v;
      g.gram(j, i) = v;
    }
  }
  return g;
}

QueryKernelVector query_vector(const ClassPartitionedDataset& train,
                               const Eigen::VectorXd& x, const Kernel& kernel) {
  if (x.size() != train.dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                "query has dimension " + std::to_string(x.size()) +
                    ", training data has " + std::to_string(train.dim()));
  }
  QueryKernelVector kv;
  kv.vec.resize(train.size());
  for (Index i = 0; i < train.size(); ++i) {
    kv.vec[i] = kernel(train.features.col(i), x);
  }
  kv.self_similarity = kernel(x, x);
  return kv;
}

CoefficientSolution ksolve(const KernelGram& gram, const QueryKernelVector& kvec,
                           const HyperParams& hp) {
  return solve(gram.gram, gram.class_offsets, kvec.vec, hp);
}

double kernel_distance(const ClassPartitionedDataset& train,
                       const Eigen::VectorXd& x, Index i, double alpha_i,
                       const Kernel& kernel) {
  const Eigen::VectorXd xi = train.features.col(i);
  const double value = kernel(x, x) - 2.0 * kernel(x, xi) * alpha_i +
                       alpha_i * alpha_i * kernel(xi, xi);
  return std::sqrt(std::max(0.0, value));
}

KldsrClassifier::KldsrClassifier(ClassPartitionedDataset train, HyperParams hp,
                                 KernelKind kind)
    : train_(std::move(train)),
      hp_(hp),
      gram_(build_gram(train_, (hp_.validate(), make_kernel(train_, kind, hp_)))),
      gram_sq_(gram_.gram.transpose() * gram_.gram),
      stage_one_(gram_sq_, train_.class_offsets, hp_) {}

CoefficientSolution KldsrClassifier::first_stage(const QueryKernelVector& kvec,
                                                 bool diagnostics) const {
  CoefficientSolution sol;
  sol.coeffs = stage_one_.solve(gram_.gram.transpose() * kvec.vec);
  sol.class_offsets = train_.class_offsets;
  if (diagnostics) {
    sol.objective =
        objective(gram_.gram, train_.class_offsets, kvec.vec, sol.coeffs, hp_);
    sol.grad_inf_norm =
        gradient(gram_.gram, train_.class_offsets, kvec.vec, sol.coeffs, hp_)
            .lpNorm<Eigen::Infinity>();
  }
  return sol;
}

LocalityFit KldsrClassifier::fit_locality(const Eigen::VectorXd& x) const {
  return fit_locality(query_vector(train_, x, gram_.kernel));
}

LocalityFit KldsrClassifier::fit_locality(const QueryKernelVector& kvec) const {
  const auto alpha = first_stage(kvec);

  // Same expansion as kernel_distance, reusing the cached kernel values.
  const Index n = train_.size();
  std::vector<double> dist(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const double a = alpha.coeffs[i];
    const double value = kvec.self_similarity - 2.0 * kvec.vec[i] * a +
                         a * a * gram_.gram(i, i);
    dist[static_cast<std::size_t>(i)] = std::sqrt(std::max(0.0, value));
  }
  auto selected = select_smallest(dist, locality_size(n, hp_.locality_fraction));

  const auto s = static_cast<Index>(selected.size());
  Eigen::MatrixXd u(s, s);
  Eigen::VectorXd uq(s);
  for (Index j = 0; j < s; ++j) {
    uq[j] = kvec.vec[selected[j]];
    for (Index i = 0; i < s; ++i) u(i, j) = gram_.gram(selected[i], selected[j]);
  }
  return solve_locality(u.transpose() * u, u.transpose() * uq,
                        std::move(selected), train_.labels, hp_);
}

ClassDecision KldsrClassifier::classify(const Eigen::VectorXd& x) const {
  const auto kvec = query_vector(train_, x, gram_.kernel);
  const auto fit = fit_locality(kvec);
  const auto s = static_cast<Index>(fit.selected_indices.size());

  Eigen::VectorXd uq(s);
  for (Index j = 0; j < s; ++j) uq[j] = kvec.vec[fit.selected_indices[j]];

  std::vector<double> scores(static_cast<std::size_t>(train_.num_classes()),
                             std::numeric_limits<double>::infinity());
  for (std::size_t k = 0; k < fit.surviving_classes.size(); ++k) {
    const Index start = fit.class_offsets[k];
    const Index nc = fit.class_offsets[k + 1] - start;
    const auto beta_c = fit.beta.segment(start, nc);
    Eigen::VectorXd recon = Eigen::VectorXd::Zero(s);
    for (Index j = 0; j < nc; ++j) {
      const Index col = fit.selected_indices[start + j];
      for (Index i = 0; i < s; ++i) {
        recon[i] += gram_.gram(fit.selected_indices[i], col) * beta_c[j];
      }
    }
    scores[fit.surviving_classes[k]] =
        regularized_residual((uq - recon).norm(), beta_c.norm());
  }
  return decide(std::move(scores));
}

ClassDecision kclassify(const ClassPartitionedDataset& train,
                        const Eigen::VectorXd& x, const HyperParams& hp,
                        KernelKind kind) {
  return KldsrClassifier(train, hp, kind).classify(x);
}

}  // namespace dsr
