#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace dsr {

using Index = Eigen::Index;

/// Feature matrix whose columns are samples, stored grouped by class so that
/// class c occupies the contiguous column range
/// [class_offsets[c], class_offsets[c + 1]).
///
/// Class ids are dense and zero-based; the original label text of class c is
/// class_names[c]. A constructed dataset is never mutated by the library.
struct ClassPartitionedDataset {
  Eigen::MatrixXd features;          // q x L
  std::vector<int> labels;           // class id per column, nondecreasing
  std::vector<Index> class_offsets;  // M + 1 entries
  std::vector<std::string> class_names;
  std::vector<Index> source_index;   // position of each column in the input

  Index dim() const { return features.rows(); }
  Index size() const { return features.cols(); }
  int num_classes() const { return static_cast<int>(class_names.size()); }
  Index class_size(int c) const {
    return class_offsets[c + 1] - class_offsets[c];
  }
  auto class_block(int c) const {
    return features.middleCols(class_offsets[c], class_size(c));
  }
  /// Column indices belonging to class c, in storage order.
  std::vector<Index> class_range(int c) const;

  /// Checks every structural invariant; throws dsr::Error on violation.
  void validate(int min_classes = 2) const;
};

/// Builds a dataset from unordered columns and raw label strings. Columns are
/// stably grouped by class. Class order is numeric when every label parses as
/// a number, lexicographic otherwise.
ClassPartitionedDataset make_dataset(const Eigen::MatrixXd& columns,
                                     const std::vector<std::string>& raw_labels,
                                     int min_classes = 2);

/// Restricts a dataset to the given column indices (any order). Classes with
/// no surviving column are dropped; class ids are re-densified.
ClassPartitionedDataset select_columns(const ClassPartitionedDataset& ds,
                                       std::span<const Index> columns);

/// Reads an IDX image file (magic 0x00000803) and its IDX label file
/// (magic 0x00000801). Pixels are scaled to [0, 1]; each image becomes one
/// column, flattened column-major.
ClassPartitionedDataset load_idx(const std::filesystem::path& images_path,
                                 const std::filesystem::path& labels_path);

/// Reads a CSV with a header row. Every column except `label_column` must be
/// a finite number.
ClassPartitionedDataset load_csv(const std::filesystem::path& path,
                                 const std::string& label_column);

void save_csv(const ClassPartitionedDataset& ds,
              const std::filesystem::path& path,
              const std::string& label_column);

struct SplitSpec {
  Index per_class_train = 50;
  std::uint64_t seed = 0;
  int trials = 1;

  void validate() const;
};

struct DatasetSplit {
  ClassPartitionedDataset train;
  ClassPartitionedDataset held_out;  // may be empty
};

/// Draws exactly spec.per_class_train columns per class without replacement.
/// The draw depends only on spec.seed and the dataset.
DatasetSplit draw_split(const ClassPartitionedDataset& ds,
                        const SplitSpec& spec);

ClassPartitionedDataset normalize_columns(const ClassPartitionedDataset& ds);

}  // namespace dsr
