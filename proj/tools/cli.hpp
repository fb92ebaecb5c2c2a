#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dsr/dictlearn.hpp"
#include "dsr/eval.hpp"
#include "dsr/kernel.hpp"
#include "dsr/solver.hpp"

namespace dsr::cli {

enum class Command { Classify, Benchmark, Sweep, Compact, Selftest };

Command parse_command(const std::string& name);
std::string_view to_string(Command command);

/// Everything a command needs. Paths are kept verbatim; empty means unset.
struct RunConfig {
  Command command = Command::Benchmark;

  std::string train_images;
  std::string train_labels;
  std::string test_images;
  std::string test_labels;
  std::string csv;
  std::string test_csv;
  std::string label_col = "label";
  bool normalize = true;

  /// Training samples per class; empty uses every training sample
  /// (benchmark and sweep fall back to 50).
  std::vector<Index> per_class;
  std::uint64_t seed = 0;
  int trials = 1;
  Index max_test = 0;

  std::vector<Method> methods{Method::Ldsr};
  HyperParams hp;
  KernelKind kernel = KernelKind::Rbf;
  std::optional<DictionaryOptions> compaction;
  std::vector<double> sweep;

  unsigned threads = 1;
  std::string output;
  std::string curve_output;
  bool record_timing = false;

  int selftest_instances = 50;
  bool corrupt_gradient = false;

  /// Throws dsr::Error(InvalidArgument) naming the offending field.
  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

/// Parses `args` (without the program name; args[0] is the command).
/// Flags override values read through --config. Throws dsr::Error with
/// InvalidArgument on any configuration problem.
RunConfig parse_args(const std::vector<std::string>& args);

/// Serializes a configuration as a --config file that parses back to an
/// equal RunConfig.
std::string to_config_file(const RunConfig& config);

/// "0.1..0.8" (step 0.1) or a comma-separated list.
std::vector<double> parse_fractions(const std::string& text);

/// Runs a full command. Exit codes: 0 success, 1 selftest failure,
/// 2 configuration error, 3 data or numerical error.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace dsr::cli
