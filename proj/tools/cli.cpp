#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dsr/error.hpp"
#include "dsr/oracles.hpp"
#include "dsr/parallel.hpp"

namespace dsr::cli {

namespace {

struct HelpRequested {
  std::string text;
};

[[noreturn]] void config_error(const std::string& message) {
  throw Error(ErrorCode::InvalidArgument, message);
}

template <typename T>
T parse_number(std::string_view text, const std::string& field) {
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    config_error(field + ": cannot parse '" + std::string(text) + "'");
  }
  return value;
}

std::vector<std::string_view> split_list(std::string_view text) {
  std::vector<std::string_view> items;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto comma = text.find(',', start);
    if (comma == std::string_view::npos) comma = text.size();
    auto item = text.substr(start, comma - start);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) items.push_back(item);
    start = comma + 1;
  }
  return items;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T, typename F>
std::string join(const std::vector<T>& items, F&& format) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    out += format(items[i]);
  }
  return out;
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += ch;
  }
  return out + '"';
}

std::vector<Method> methods_or(const RunConfig& cfg, std::vector<Method> fallback) {
  return cfg.methods.empty() ? fallback : cfg.methods;
}

std::vector<Index> per_class_or(const RunConfig& cfg, Index fallback) {
  return cfg.per_class.empty() ? std::vector<Index>{fallback} : cfg.per_class;
}

// Output goes to `path` when set, otherwise to `fallback`.
void write_to(const std::string& path, std::ostream& fallback,
              const std::function<void(std::ostream&)>& write) {
  if (path.empty()) {
    write(fallback);
    return;
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) {
    throw Error(ErrorCode::FileNotFound, "cannot open output file " + path);
  }
  write(file);
  if (!file) throw Error(ErrorCode::FileNotFound, "failed writing " + path);
}

ClassPartitionedDataset load_source(const std::string& images,
                                    const std::string& labels,
                                    const std::string& csv,
                                    const RunConfig& cfg) {
  auto ds = csv.empty() ? load_idx(images, labels) : load_csv(csv, cfg.label_col);
  return cfg.normalize ? normalize_columns(ds) : ds;
}

bool has_test_source(const RunConfig& cfg) {
  return !cfg.test_csv.empty() || !cfg.test_images.empty();
}

ClassPartitionedDataset load_train(const RunConfig& cfg) {
  return load_source(cfg.train_images, cfg.train_labels, cfg.csv, cfg);
}

ClassPartitionedDataset load_test(const RunConfig& cfg) {
  return load_source(cfg.test_images, cfg.test_labels, cfg.test_csv, cfg);
}

EvalOptions eval_options(const RunConfig& cfg) {
  EvalOptions opts;
  opts.threads = cfg.threads;
  opts.kernel = cfg.kernel;
  opts.compaction = cfg.compaction;
  opts.max_test = cfg.max_test;
  opts.record_timing = cfg.record_timing;
  return opts;
}

nlohmann::json score_json(double s) {
  return std::isfinite(s) ? nlohmann::json(s) : nlohmann::json();
}

int cmd_classify(const RunConfig& cfg, std::ostream& out) {
  auto train = load_train(cfg);
  std::optional<ClassPartitionedDataset> test;
  if (has_test_source(cfg)) test = load_test(cfg);
  if (!cfg.per_class.empty()) {
    auto split = draw_split(train, {cfg.per_class.front(), cfg.seed, 1});
    train = std::move(split.train);
    if (!test) test = std::move(split.held_out);
  }
  if (!test) config_error("classify needs a test set (--test-images/--test-labels, --test-csv or --per-class)");
  if (cfg.compaction) {
    auto dict = *cfg.compaction;
    dict.seed = cfg.seed;
    train = compact_dataset(train, dict, cfg.threads);
  }

  // Queries in input order, optionally truncated.
  std::vector<Index> order(static_cast<std::size_t>(test->size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    return test->source_index[a] < test->source_index[b];
  });
  if (cfg.max_test > 0 && cfg.max_test < test->size()) {
    order.resize(static_cast<std::size_t>(cfg.max_test));
  }
  Eigen::MatrixXd queries(test->dim(), static_cast<Index>(order.size()));
  for (std::size_t j = 0; j < order.size(); ++j) {
    queries.col(static_cast<Index>(j)) = test->features.col(order[j]);
  }

  const auto method = methods_or(cfg, {Method::Ldsr}).front();
  const auto classifier = make_classifier(method, train, cfg.hp, cfg.kernel);
  const auto decisions = classifier->classify_batch(queries, cfg.threads);

  write_to(cfg.output, out, [&](std::ostream& os) {
    for (std::size_t j = 0; j < order.size(); ++j) {
      const auto col = order[j];
      const auto& d = decisions[j];
      nlohmann::ordered_json scores = nlohmann::ordered_json::object();
      for (int c = 0; c < train.num_classes(); ++c) {
        scores[train.class_names[c]] = score_json(d.scores[c]);
      }
      nlohmann::ordered_json line;
      line["index"] = test->source_index[col];
      line["label"] = test->class_names[test->labels[col]];
      line["predicted"] = train.class_names[d.predicted];
      line["scores"] = std::move(scores);
      os << line.dump() << '\n';
    }
  });
  return 0;
}

void emit_curve(const RunConfig& cfg, const SweepCurve& curve,
                const std::vector<Method>& methods, std::ostream& out,
                std::ostream& err) {
  write_to(cfg.curve_output, out, [&](std::ostream& os) { os << to_csv(curve); });
  for (auto m : methods) {
    const double best = curve.best_fraction(m);
    err << to_string(m) << ": best locality fraction " << best << '\n';
    if (best < 0.2 - 1e-12 || best > 0.5 + 1e-12) {
      err << "warning: " << to_string(m)
          << " best fraction lies outside [0.2, 0.5]\n";
    }
  }
}

int cmd_benchmark(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto ds = load_train(cfg);
  std::optional<ClassPartitionedDataset> test;
  if (has_test_source(cfg)) test = load_test(cfg);
  const auto methods = methods_or(cfg, {Method::Ldsr});
  const auto opts = eval_options(cfg);

  ProtocolTable table;
  for (Index n : per_class_or(cfg, 50)) {
    const SplitSpec spec{n, cfg.seed, cfg.trials};
    auto part = run_protocol(ds, test ? &*test : nullptr, spec, methods, cfg.hp, opts);
    table.rows.insert(table.rows.end(), part.rows.begin(), part.rows.end());
  }
  out << to_text(table, cfg.record_timing);
  write_to(cfg.output, out, [&](std::ostream& os) {
    os << to_json(table, cfg.record_timing).dump(2) << '\n';
  });

  if (!cfg.sweep.empty()) {
    const SplitSpec spec{per_class_or(cfg, 50).front(), cfg.seed, cfg.trials};
    const auto curve = sweep_locality(ds, test ? &*test : nullptr, spec, cfg.sweep,
                                      cfg.hp, methods, opts);
    emit_curve(cfg, curve, methods, out, err);
  }
  return 0;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto ds = load_train(cfg);
  std::optional<ClassPartitionedDataset> test;
  if (has_test_source(cfg)) test = load_test(cfg);
  const auto methods = methods_or(cfg, {Method::Ldsr, Method::Kldsr});
  const auto fractions = cfg.sweep.empty() ? parse_fractions("0.1..0.8") : cfg.sweep;
  const SplitSpec spec{per_class_or(cfg, 50).front(), cfg.seed, cfg.trials};
  const auto curve = sweep_locality(ds, test ? &*test : nullptr, spec, fractions,
                                    cfg.hp, methods, eval_options(cfg));
  emit_curve(cfg, curve, methods, out, err);
  return 0;
}

int cmd_compact(const RunConfig& cfg, std::ostream& out) {
  if (!cfg.compaction) config_error("compact-atoms: compact needs --compact-atoms > 0");
  if (cfg.output.empty()) config_error("output: compact needs --output");
  auto train = load_train(cfg);
  if (!cfg.per_class.empty()) {
    train = draw_split(train, {cfg.per_class.front(), cfg.seed, 1}).train;
  }
  auto dict = *cfg.compaction;
  dict.seed = cfg.seed;
  const auto compacted = compact_dataset(train, dict, cfg.threads);
  save_csv(compacted, cfg.output, cfg.label_col);
  out << "wrote " << compacted.size() << " atoms over " << compacted.num_classes()
      << " classes to " << cfg.output << '\n';
  return 0;
}

int cmd_selftest(const RunConfig& cfg, std::ostream& out) {
  oracle::SelftestOptions opts;
  opts.seed = cfg.seed;
  opts.instances = cfg.selftest_instances;
  opts.corrupt_gradient = cfg.corrupt_gradient;
  bool ok = true;
  for (const auto& check : oracle::run_selftest(opts)) {
    char line[160];
    std::snprintf(line, sizeof line, "%-38s residual %.3e  tolerance %.1e  %s\n",
                  check.name.c_str(), check.residual, check.tolerance,
                  check.passed() ? "PASS" : "FAIL");
    out << line;
    ok = ok && check.passed();
  }
  return ok ? 0 : 1;
}

}  // namespace

Command parse_command(const std::string& name) {
  if (name == "classify") return Command::Classify;
  if (name == "benchmark") return Command::Benchmark;
  if (name == "sweep") return Command::Sweep;
  if (name == "compact") return Command::Compact;
  if (name == "selftest") return Command::Selftest;
  config_error("unknown command '" + name +
               "' (expected classify, benchmark, sweep, compact or selftest)");
}

std::string_view to_string(Command command) {
  switch (command) {
    case Command::Classify: return "classify";
    case Command::Benchmark: return "benchmark";
    case Command::Sweep: return "sweep";
    case Command::Compact: return "compact";
    case Command::Selftest: return "selftest";
  }
  return "?";
}

std::vector<double> parse_fractions(const std::string& text) {
  std::vector<double> out;
  if (const auto dots = text.find(".."); dots != std::string::npos) {
    const double lo = parse_number<double>(std::string_view(text).substr(0, dots), "sweep-locality");
    const double hi = parse_number<double>(std::string_view(text).substr(dots + 2), "sweep-locality");
    if (!(lo <= hi)) config_error("sweep-locality: empty range '" + text + "'");
    const auto steps = std::llround((hi - lo) / 0.1);
    for (long long i = 0; i <= steps; ++i) {
      out.push_back(std::round((lo + 0.1 * static_cast<double>(i)) * 1e10) / 1e10);
    }
  } else {
    for (auto item : split_list(text)) {
      out.push_back(parse_number<double>(item, "sweep-locality"));
    }
  }
  if (out.empty()) config_error("sweep-locality: no fractions in '" + text + "'");
  for (double f : out) {
    if (!(f > 0.0 && f <= 1.0)) config_error("sweep-locality: fractions must lie in (0, 1]");
  }
  return out;
}

void RunConfig::validate() const {
  hp.validate();
  if (trials < 1) config_error("trials must be >= 1");
  for (auto n : per_class) {
    if (n < 1) config_error("per-class entries must be >= 1");
  }
  if (max_test < 0) config_error("max-test must be >= 0");
  if (threads < 1) config_error("threads must be >= 1");
  if (selftest_instances < 1) config_error("instances must be >= 1");
  for (double f : sweep) {
    if (!(f > 0.0 && f <= 1.0)) config_error("sweep-locality fractions must lie in (0, 1]");
  }
  if (compaction) {
    if (compaction->atoms < 1) config_error("compact-atoms must be >= 1");
    if (!(compaction->tau >= 0.0)) config_error("compact-tau must be >= 0");
    if (compaction->iters < 1) config_error("compact-iters must be >= 1");
  }
  if (command == Command::Classify && methods.size() > 1) {
    config_error("method: classify takes a single method");
  }
  if (command == Command::Selftest) return;

  const bool idx = !train_images.empty() || !train_labels.empty();
  if (idx == !csv.empty()) {
    config_error("training data: give either --train-images with --train-labels, or --csv");
  }
  if (idx && (train_images.empty() || train_labels.empty())) {
    config_error("training data: --train-images and --train-labels go together");
  }
  if (!test_images.empty() != !test_labels.empty()) {
    config_error("test data: --test-images and --test-labels go together");
  }
  if (!test_images.empty() && !test_csv.empty()) {
    config_error("test data: give either --test-images/--test-labels or --test-csv");
  }
}

RunConfig parse_args(const std::vector<std::string>& args) {
  if (args.empty()) {
    config_error("missing command (classify, benchmark, sweep, compact or selftest)");
  }
  if (args[0] == "-h" || args[0] == "--help") {
    throw HelpRequested{
        "usage: dsr <classify|benchmark|sweep|compact|selftest> [options]\n"
        "       dsr <command> --help\n"};
  }

  RunConfig cfg;
  cfg.command = parse_command(args[0]);

  std::string per_class;
  std::string methods;
  std::string kernel = "rbf";
  std::string sigma = "median";
  std::string sweep;
  Index compact_atoms = 0;
  DictionaryOptions dict;
  bool no_normalize = false;
  unsigned threads = default_thread_count();

  CLI::App app{"Discriminant sparse representation classifiers", "dsr " + args[0]};
  app.set_config("--config", "", "TOML-style option file; command-line flags win");
  app.allow_config_extras(CLI::config_extras_mode::error);

  app.add_option("--train-images", cfg.train_images, "IDX image file for training");
  app.add_option("--train-labels", cfg.train_labels, "IDX label file for training");
  app.add_option("--test-images", cfg.test_images, "IDX image file for testing");
  app.add_option("--test-labels", cfg.test_labels, "IDX label file for testing");
  app.add_option("--csv", cfg.csv, "CSV training data with a header row");
  app.add_option("--test-csv", cfg.test_csv, "CSV test data with a header row");
  app.add_option("--label-col", cfg.label_col, "Label column name in CSV files");
  app.add_flag("--no-normalize", no_normalize, "Skip unit-norm column scaling");

  app.add_option("--per-class", per_class, "Training samples per class, e.g. 50,100,300");
  app.add_option("--seed", cfg.seed, "Master seed; trial t uses seed + t");
  app.add_option("--trials", cfg.trials, "Random splits per setting");
  app.add_option("--max-test", cfg.max_test, "Classify only the first k test samples (0 = all)");

  app.add_option("--methods,--method", methods, "Comma list of ldsr, kldsr, crc, nsc");
  app.add_option("--lambda", cfg.hp.lambda, "Ridge weight");
  app.add_option("--eta", cfg.hp.eta, "Within-class weight");
  app.add_option("--gamma", cfg.hp.gamma, "Between-class weight");
  app.add_option("--locality", cfg.hp.locality_fraction, "Locality fraction s / L");
  app.add_option("--kernel", kernel, "rbf or linear");
  app.add_option("--sigma", sigma, "RBF bandwidth or 'median'");

  app.add_option("--compact-atoms", compact_atoms, "Atoms per class (0 = no compaction)");
  app.add_option("--compact-tau", dict.tau, "Code ridge weight");
  app.add_option("--compact-iters", dict.iters, "Alternating iterations");

  app.add_option("--sweep-locality", sweep, "Fractions: 0.1..0.8 or a comma list");
  app.add_option("--threads", threads, "Worker threads");
  app.add_option("--output", cfg.output, "Result file (default: standard output)");
  app.add_option("--curve-output", cfg.curve_output, "Sweep curve CSV file");
  app.add_flag("--record-timing", cfg.record_timing, "Include wall-clock seconds");
  app.add_option("--instances", cfg.selftest_instances, "Random instances for selftest");
  app.add_flag("--corrupt-gradient", cfg.corrupt_gradient)->group("");

  std::vector<std::string> rest(args.rbegin(), args.rend() - 1);
  try {
    app.parse(rest);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested{app.help()};
  } catch (const CLI::ParseError& e) {
    config_error(e.what());
  }

  cfg.normalize = !no_normalize;
  cfg.threads = threads;
  for (auto item : split_list(per_class)) {
    cfg.per_class.push_back(parse_number<Index>(item, "per-class"));
  }
  if (!methods.empty()) cfg.methods = parse_methods(methods);
  cfg.kernel = parse_kernel_kind(kernel);
  if (sigma != "median") {
    cfg.hp.sigma = parse_number<double>(sigma, "sigma");
  }
  if (!sweep.empty()) cfg.sweep = parse_fractions(sweep);
  if (compact_atoms != 0) {
    dict.atoms = compact_atoms;
    cfg.compaction = dict;
  }
  cfg.validate();
  return cfg;
}

std::string to_config_file(const RunConfig& cfg) {
  std::ostringstream os;
  auto str = [&](const char* key, const std::string& value) {
    if (!value.empty()) os << key << " = " << quoted(value) << '\n';
  };
  str("train-images", cfg.train_images);
  str("train-labels", cfg.train_labels);
  str("test-images", cfg.test_images);
  str("test-labels", cfg.test_labels);
  str("csv", cfg.csv);
  str("test-csv", cfg.test_csv);
  str("label-col", cfg.label_col);
  os << "no-normalize = " << (cfg.normalize ? "false" : "true") << '\n';
  str("per-class", join(cfg.per_class, [](Index n) { return std::to_string(n); }));
  os << "seed = " << cfg.seed << '\n';
  os << "trials = " << cfg.trials << '\n';
  os << "max-test = " << cfg.max_test << '\n';
  str("methods", join(cfg.methods, [](Method m) { return std::string(to_string(m)); }));
  os << "lambda = " << format_double(cfg.hp.lambda) << '\n';
  os << "eta = " << format_double(cfg.hp.eta) << '\n';
  os << "gamma = " << format_double(cfg.hp.gamma) << '\n';
  os << "locality = " << format_double(cfg.hp.locality_fraction) << '\n';
  str("kernel", std::string(to_string(cfg.kernel)));
  str("sigma", cfg.hp.sigma ? format_double(*cfg.hp.sigma) : "median");
  if (cfg.compaction) {
    os << "compact-atoms = " << cfg.compaction->atoms << '\n';
    os << "compact-tau = " << format_double(cfg.compaction->tau) << '\n';
    os << "compact-iters = " << cfg.compaction->iters << '\n';
  }
  str("sweep-locality", join(cfg.sweep, format_double));
  os << "threads = " << cfg.threads << '\n';
  str("output", cfg.output);
  str("curve-output", cfg.curve_output);
  os << "record-timing = " << (cfg.record_timing ? "true" : "false") << '\n';
  os << "instances = " << cfg.selftest_instances << '\n';
  os << "corrupt-gradient = " << (cfg.corrupt_gradient ? "true" : "false") << '\n';
  return os.str();
}

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = parse_args(args);
  } catch (const HelpRequested& help) {
    out << help.text;
    return 0;
  } catch (const Error& e) {
    err << "dsr: " << e.what() << '\n';
    return 2;
  }

  try {
    switch (cfg.command) {
      case Command::Classify: return cmd_classify(cfg, out);
      case Command::Benchmark: return cmd_benchmark(cfg, out, err);
      case Command::Sweep: return cmd_sweep(cfg, out, err);
      case Command::Compact: return cmd_compact(cfg, out);
      case Command::Selftest: return cmd_selftest(cfg, out);
    }
  } catch (const Error& e) {
    err << "dsr: " << e.what() << '\n';
    return e.is_config_error() ? 2 : 3;
  } catch (const std::exception& e) {
    err << "dsr: " << e.what() << '\n';
    return 3;
  }
  return 0;
}

}  // namespace dsr::cli
