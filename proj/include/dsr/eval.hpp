#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "dsr/classifier.hpp"
#include "dsr/dataset.hpp"
#include "dsr/dictlearn.hpp"
#include "dsr/kernel.hpp"
#include "dsr/solver.hpp"

namespace dsr {

enum class Method { Ldsr, Kldsr, Crc, Nsc };

Method parse_method(std::string_view name);
std::string_view to_string(Method method);
/// Comma-separated method list, e.g. "ldsr,crc".
std::vector<Method> parse_methods(std::string_view list);

struct EvalOptions {
  unsigned threads = 1;
  KernelKind kernel = KernelKind::Rbf;
  /// Replace every trial's training blocks by learned dictionaries.
  std::optional<DictionaryOptions> compaction;
  /// Evaluate only the first `max_test` test samples in input order (0 = all).
  Index max_test = 0;
  /// Wall-clock times make output non-reproducible, so they are opt-in.
  bool record_timing = false;
};

std::unique_ptr<Classifier> make_classifier(Method method,
                                            ClassPartitionedDataset train,
                                            const HyperParams& hp,
                                            KernelKind kernel = KernelKind::Rbf);

struct TrialResult {
  Method method = Method::Ldsr;
  std::uint64_t seed = 0;
  double top1 = 0.0;
  double top5 = 0.0;
  /// Rows: true class, columns: predicted class, over `class_names` (training
  /// classes first, then classes only present in the test set).
  Eigen::MatrixXi confusion;
  std::vector<std::string> class_names;
  double seconds = 0.0;
};

/// Classifies every test column with a classifier trained on `train`. Test
/// labels are matched to training classes by name; unseen classes count as
/// errors.
TrialResult evaluate(Method method, const ClassPartitionedDataset& train,
                     const ClassPartitionedDataset& test, const HyperParams& hp,
                     const EvalOptions& options = {});

/// Same, reusing an already trained classifier.
TrialResult evaluate(const Classifier& classifier,
                     const ClassPartitionedDataset& test,
                     const EvalOptions& options = {});

struct ProtocolRow {
  Method method = Method::Ldsr;
  Index n_per_class = 0;
  int trials = 0;
  double mean_top1 = 0.0;
  double std_top1 = 0.0;
  double mean_top5 = 0.0;
  double seconds = 0.0;
};

struct ProtocolTable {
  std::vector<ProtocolRow> rows;
};

/// Repeated random splits. Trial t draws its split with seed spec.seed + t.
/// When `test_set` is given it is used for testing; otherwise the held-out
/// remainder of each split is.
ProtocolTable run_protocol(const ClassPartitionedDataset& ds,
                           const ClassPartitionedDataset* test_set,
                           const SplitSpec& spec,
                           const std::vector<Method>& methods,
                           const HyperParams& hp,
                           const EvalOptions& options = {});

struct SweepPoint {
  double fraction = 0.0;
  Method method = Method::Ldsr;
  double mean_top1 = 0.0;
  double std_top1 = 0.0;
};

struct SweepCurve {
  std::vector<SweepPoint> points;

  /// Fraction with the highest mean accuracy for `method`; ties go to the
  /// smaller fraction.
  double best_fraction(Method method) const;
};

SweepCurve sweep_locality(const ClassPartitionedDataset& ds,
                          const ClassPartitionedDataset* test_set,
                          const SplitSpec& spec,
                          const std::vector<double>& fractions,
                          const HyperParams& hp,
                          const std::vector<Method>& methods = {Method::Ldsr,
                                                                Method::Kldsr},
                          const EvalOptions& options = {});

nlohmann::json to_json(const ProtocolTable& table, bool with_timing);
std::string to_text(const ProtocolTable& table, bool with_timing);
std::string to_csv(const SweepCurve& curve);

}  // namespace dsr
