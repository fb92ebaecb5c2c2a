#include "dsr/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include "dsr/baselines.hpp"
#include "dsr/error.hpp"
#include "dsr/kernel.hpp"
#include "dsr/ldsr.hpp"

namespace dsr {

namespace {

constexpr std::size_t kTopK = 5;

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

// Fixed summation order; sample standard deviation (0 for a single trial).
MeanStd mean_std(const std::vector<double>& values) {
  MeanStd out;
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return out;
}

ClassPartitionedDataset limit_test(const ClassPartitionedDataset& test,
                                   Index max_test) {
  if (max_test <= 0 || max_test >= test.size()) return test;
  std::vector<Index> order(static_cast<std::size_t>(test.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    return test.source_index[a] < test.source_index[b];
  });
  order.resize(static_cast<std::size_t>(max_test));
  return select_columns(test, order);
}

}  // namespace

Method parse_method(std::string_view name) {
  if (name == "ldsr") return Method::Ldsr;
  if (name == "kldsr") return Method::Kldsr;
  if (name == "crc") return Method::Crc;
  if (name == "nsc") return Method::Nsc;
  throw Error(ErrorCode::InvalidArgument,
              "unknown method '" + std::string(name) +
                  "' (expected ldsr, kldsr, crc or nsc)");
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::Ldsr: return "ldsr";
    case Method::Kldsr: return "kldsr";
    case Method::Crc: return "crc";
    case Method::Nsc: return "nsc";
  }
  return "?";
}

std::vector<Method> parse_methods(std::string_view list) {
  std::vector<Method> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    auto comma = list.find(',', start);
    if (comma == std::string_view::npos) comma = list.size();
    auto item = list.substr(start, comma - start);
    if (!item.empty()) out.push_back(parse_method(item));
    start = comma + 1;
  }
  if (out.empty()) {
    throw Error(ErrorCode::InvalidArgument, "method list is empty");
  }
  return out;
}

std::unique_ptr<Classifier> make_classifier(Method method,
                                            ClassPartitionedDataset train,
                                            const HyperParams& hp,
                                            KernelKind kernel) {
  switch (method) {
    case Method::Ldsr:
      return std::make_unique<LdsrClassifier>(std::move(train), hp);
    case Method::Kldsr:
      return std::make_unique<KldsrClassifier>(std::move(train), hp, kernel);
    case Method::Crc:
      return std::make_unique<CrcClassifier>(std::move(train), hp.lambda);
    case Method::Nsc:
      return std::make_unique<NscClassifier>(std::move(train));
  }
  throw Error(ErrorCode::InvalidArgument, "unknown method");
}

TrialResult evaluate(const Classifier& classifier,
                     const ClassPartitionedDataset& test_in,
                     const EvalOptions& options) {
  const auto& train = classifier.train();
  const auto test = limit_test(test_in, options.max_test);
  if (test.size() > 0 && test.dim() != train.dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                "test samples have dimension " + std::to_string(test.dim()) +
                    ", training data has " + std::to_string(train.dim()));
  }

  TrialResult result;
  result.class_names = train.class_names;
  std::map<std::string, int> index_of;
  for (int c = 0; c < train.num_classes(); ++c) index_of[train.class_names[c]] = c;
  std::vector<int> truth_of_test_class(static_cast<std::size_t>(test.num_classes()));
  for (int c = 0; c < test.num_classes(); ++c) {
    auto [it, inserted] = index_of.emplace(test.class_names[c],
                                           static_cast<int>(result.class_names.size()));
    if (inserted) result.class_names.push_back(test.class_names[c]);
    truth_of_test_class[c] = it->second;
  }

  const auto start = std::chrono::steady_clock::now();
  const auto decisions = classifier.classify_batch(test.features, options.threads);
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const auto k = static_cast<Index>(result.class_names.size());
  result.confusion = Eigen::MatrixXi::Zero(k, k);
  Index hits1 = 0;
  Index hits5 = 0;
  for (Index j = 0; j < test.size(); ++j) {
    const int truth = truth_of_test_class[test.labels[j]];
    const auto& d = decisions[static_cast<std::size_t>(j)];
    ++result.confusion(truth, d.predicted);
    if (d.predicted == truth) ++hits1;
    const auto top = std::min(kTopK, d.ranking.size());
    if (std::find(d.ranking.begin(), d.ranking.begin() + static_cast<std::ptrdiff_t>(top),
                  truth) != d.ranking.begin() + static_cast<std::ptrdiff_t>(top)) {
      ++hits5;
    }
  }
  if (test.size() > 0) {
    result.top1 = static_cast<double>(hits1) / static_cast<double>(test.size());
    result.top5 = static_cast<double>(hits5) / static_cast<double>(test.size());
  }
  return result;
}

TrialResult evaluate(Method method, const ClassPartitionedDataset& train,
                     const ClassPartitionedDataset& test, const HyperParams& hp,
                     const EvalOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const auto classifier = make_classifier(method, train, hp, options.kernel);
  auto result = evaluate(*classifier, test, options);
  result.method = method;
  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

ProtocolTable run_protocol(const ClassPartitionedDataset& ds,
                           const ClassPartitionedDataset* test_set,
                           const SplitSpec& spec,
                           const std::vector<Method>& methods,
                           const HyperParams& hp, const EvalOptions& options) {
  spec.validate();
  hp.validate();
  std::vector<std::vector<TrialResult>> per_method(methods.size());
  for (int t = 0; t < spec.trials; ++t) {
    SplitSpec trial_spec = spec;
    trial_spec.seed = spec.seed + static_cast<std::uint64_t>(t);
    auto split = draw_split(ds, trial_spec);
    if (options.compaction) {
      auto dict = *options.compaction;
      dict.seed = trial_spec.seed;
      split.train = compact_dataset(split.train, dict, options.threads);
    }
    const auto& test = test_set ? *test_set : split.held_out;
    for (std::size_t m = 0; m < methods.size(); ++m) {
      auto r = evaluate(methods[m], split.train, test, hp, options);
      r.seed = trial_spec.seed;
      per_method[m].push_back(std::move(r));
    }
  }

  ProtocolTable table;
  for (std::size_t m = 0; m < methods.size(); ++m) {
    std::vector<double> top1, top5;
    double seconds = 0.0;
    for (const auto& r : per_method[m]) {
      top1.push_back(r.top1);
      top5.push_back(r.top5);
      seconds += r.seconds;
    }
    const auto s1 = mean_std(top1);
    ProtocolRow row;
    row.method = methods[m];
    row.n_per_class = spec.per_class_train;
    row.trials = spec.trials;
    row.mean_top1 = s1.mean;
    row.std_top1 = s1.std;
    row.mean_top5 = mean_std(top5).mean;
    row.seconds = seconds;
    table.rows.push_back(row);
  }
  return table;
}

double SweepCurve::best_fraction(Method method) const {
  double best = -1.0;
  double best_fraction = 0.0;
  for (const auto& p : points) {
    if (p.method == method && p.mean_top1 > best) {
      best = p.mean_top1;
      best_fraction = p.fraction;
    }
  }
  return best_fraction;
}

SweepCurve sweep_locality(const ClassPartitionedDataset& ds,
                          const ClassPartitionedDataset* test_set,
                          const SplitSpec& spec,
                          const std::vector<double>& fractions,
                          const HyperParams& hp,
                          const std::vector<Method>& methods,
                          const EvalOptions& options) {
  SweepCurve curve;
  for (double f : fractions) {
    auto swept = hp;
    swept.locality_fraction = f;
    const auto table = run_protocol(ds, test_set, spec, methods, swept, options);
    for (const auto& row : table.rows) {
      curve.points.push_back({f, row.method, row.mean_top1, row.std_top1});
    }
  }
  return curve;
}

nlohmann::json to_json(const ProtocolTable& table, bool with_timing) {
  auto rows = nlohmann::json::array();
  for (const auto& r : table.rows) {
    rows.push_back({
        {"method", std::string(to_string(r.method))},
        {"n_per_class", r.n_per_class},
        {"trials", r.trials},
        {"mean_top1", r.mean_top1},
        {"std_top1", r.std_top1},
        {"mean_top5", r.mean_top5},
        {"seconds", with_timing ? nlohmann::json(r.seconds) : nlohmann::json()},
    });
  }
  return rows;
}

std::string to_text(const ProtocolTable& table, bool with_timing) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-8s %11s %6s %10s %9s %10s", "method",
                "n_per_class", "trials", "mean_top1", "std_top1", "mean_top5");
  out << line << (with_timing ? "    seconds" : "") << '\n';
  for (const auto& r : table.rows) {
    std::snprintf(line, sizeof line, "%-8s %11lld %6d %10.4f %9.4f %10.4f",
                  std::string(to_string(r.method)).c_str(),
                  static_cast<long long>(r.n_per_class), r.trials,
                  100.0 * r.mean_top1, 100.0 * r.std_top1, 100.0 * r.mean_top5);
    out << line;
    if (with_timing) {
      std::snprintf(line, sizeof line, " %10.2f", r.seconds);
      out << line;
    }
    out << '\n';
  }
  return out.str();
}

std::string to_csv(const SweepCurve& curve) {
  std::ostringstream out;
  out << "fraction,method,mean_top1,std_top1\n";
  char line[128];
  for (const auto& p : curve.points) {
    std::snprintf(line, sizeof line, "%.4g,%s,%.17g,%.17g\n", p.fraction,
                  std::string(to_string(p.method)).c_str(), p.mean_top1,
                  p.std_top1);
    out << line;
  }
  return out.str();
}

}  // namespace dsr
