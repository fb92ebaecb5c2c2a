#include "dsr/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "dsr/error.hpp"
#include "dsr/random.hpp"

namespace dsr {

namespace {

constexpr std::uint32_t kIdxImageMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::FileNotFound, "cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes,
                        std::size_t offset, const std::filesystem::path& path) {
  if (bytes.size() < offset + 4) {
    throw Error(ErrorCode::TruncatedFile, path.string() + ": header cut short");
  }
  return (std::uint32_t{bytes[offset]} << 24) |
         (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) |
         std::uint32_t{bytes[offset + 3]};
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
    s = s.substr(1, s.size() - 2);
  }
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

bool parse_double(std::string_view text, double& out) {
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size();
}

}  // namespace

std::vector<Index> ClassPartitionedDataset::class_range(int c) const {
  std::vector<Index> out(static_cast<std::size_t>(class_size(c)));
  std::iota(out.begin(), out.end(), class_offsets[c]);
  return out;
}

void ClassPartitionedDataset::validate(int min_classes) const {
  const auto m = num_classes();
  if (m < min_classes) {
    throw Error(ErrorCode::SingleClass, "dataset has " + std::to_string(m) +
                                            " classes, need at least " +
                                            std::to_string(min_classes));
  }
  if (class_offsets.size() != static_cast<std::size_t>(m) + 1 ||
      class_offsets.front() != 0 || class_offsets.back() != size() ||
      labels.size() != static_cast<std::size_t>(size()) ||
      source_index.size() != static_cast<std::size_t>(size())) {
    throw Error(ErrorCode::DimensionMismatch, "inconsistent class layout");
  }
  for (int c = 0; c < m; ++c) {
    if (class_size(c) < 1) {
      throw Error(ErrorCode::InsufficientSamples,
                  "class '" + class_names[c] + "' has no samples");
    }
    for (Index j = class_offsets[c]; j < class_offsets[c + 1]; ++j) {
      if (labels[j] != c) {
        throw Error(ErrorCode::DimensionMismatch, "label/offset disagreement");
      }
    }
  }
}

ClassPartitionedDataset make_dataset(const Eigen::MatrixXd& columns,
                                     const std::vector<std::string>& raw_labels,
                                     int min_classes) {
  if (static_cast<Index>(raw_labels.size()) != columns.cols()) {
    throw Error(ErrorCode::CountMismatch,
                std::to_string(columns.cols()) + " samples but " +
                    std::to_string(raw_labels.size()) + " labels");
  }

  std::vector<std::string> names(raw_labels);
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());

  std::vector<double> numeric(names.size());
  bool all_numeric = true;
  for (std::size_t i = 0; i < names.size() && all_numeric; ++i) {
    all_numeric = parse_double(names[i], numeric[i]);
  }
  if (all_numeric) {
    std::vector<std::size_t> order(names.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
      return numeric[a] < numeric[b];
    });
    std::vector<std::string> sorted;
    sorted.reserve(names.size());
    for (auto i : order) sorted.push_back(names[i]);
    names = std::move(sorted);
  }

  std::map<std::string, int> id_of;
  for (std::size_t c = 0; c < names.size(); ++c) {
    id_of[names[c]] = static_cast<int>(c);
  }

  std::vector<int> dense(raw_labels.size());
  for (std::size_t j = 0; j < raw_labels.size(); ++j) {
    dense[j] = id_of.at(raw_labels[j]);
  }
  std::vector<Index> order(raw_labels.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return dense[a] < dense[b]; });

  ClassPartitionedDataset ds;
  ds.features.resize(columns.rows(), columns.cols());
  ds.labels.resize(order.size());
  ds.source_index = order;
  ds.class_names = names;
  ds.class_offsets.assign(names.size() + 1, 0);
  for (std::size_t j = 0; j < order.size(); ++j) {
    ds.features.col(static_cast<Index>(j)) = columns.col(order[j]);
    ds.labels[j] = dense[order[j]];
    ++ds.class_offsets[ds.labels[j] + 1];
  }
  std::partial_sum(ds.class_offsets.begin(), ds.class_offsets.end(),
                   ds.class_offsets.begin());
  ds.validate(min_classes);
  return ds;
}

ClassPartitionedDataset select_columns(const ClassPartitionedDataset& ds,
                                       std::span<const Index> columns) {
  std::vector<Index> sorted(columns.begin(), columns.end());
  std::sort(sorted.begin(), sorted.end());

  ClassPartitionedDataset out;
  out.features.resize(ds.dim(), static_cast<Index>(sorted.size()));
  out.labels.reserve(sorted.size());
  out.source_index.reserve(sorted.size());
  out.class_offsets.push_back(0);
  int last = -1;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    const Index src = sorted[j];
    if (src < 0 || src >= ds.size()) {
      throw Error(ErrorCode::DimensionMismatch,
                  "column index " + std::to_string(src) + " out of range");
    }
    const int c = ds.labels[src];
    if (c != last) {
      if (last != -1) out.class_offsets.push_back(static_cast<Index>(j));
      out.class_names.push_back(ds.class_names[c]);
      last = c;
    }
    out.features.col(static_cast<Index>(j)) = ds.features.col(src);
    out.labels.push_back(out.num_classes() - 1);
    out.source_index.push_back(ds.source_index[src]);
  }
  if (!sorted.empty()) out.class_offsets.push_back(out.size());
  return out;
}

ClassPartitionedDataset load_idx(const std::filesystem::path& images_path,
                                 const std::filesystem::path& labels_path) {
  const auto images = read_bytes(images_path);
  const auto labels = read_bytes(labels_path);

  if (read_be32(images, 0, images_path) != kIdxImageMagic) {
    throw Error(ErrorCode::BadMagic, images_path.string() +
                                         ": expected image magic 0x00000803");
  }
  if (read_be32(labels, 0, labels_path) != kIdxLabelMagic) {
    throw Error(ErrorCode::BadMagic, labels_path.string() +
                                         ": expected label magic 0x00000801");
  }
  const std::size_t count = read_be32(images, 4, images_path);
  const std::size_t rows = read_be32(images, 8, images_path);
  const std::size_t cols = read_be32(images, 12, images_path);
  const std::size_t label_count = read_be32(labels, 4, labels_path);
  if (count != label_count) {
    throw Error(ErrorCode::CountMismatch,
                std::to_string(count) + " images but " +
                    std::to_string(label_count) + " labels");
  }
  const std::size_t q = rows * cols;
  if (images.size() < 16 + count * q) {
    throw Error(ErrorCode::TruncatedFile,
                images_path.string() + ": pixel data cut short");
  }
  if (labels.size() < 8 + count) {
    throw Error(ErrorCode::TruncatedFile,
                labels_path.string() + ": label data cut short");
  }

  Eigen::MatrixXd columns(static_cast<Index>(q), static_cast<Index>(count));
  std::vector<std::string> raw(count);
  for (std::size_t n = 0; n < count; ++n) {
    const std::uint8_t* pixels = images.data() + 16 + n * q;
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        columns(static_cast<Index>(c * rows + r), static_cast<Index>(n)) =
            pixels[r * cols + c] / 255.0;
      }
    }
    raw[n] = std::to_string(labels[8 + n]);
  }
  return make_dataset(columns, raw);
}

ClassPartitionedDataset load_csv(const std::filesystem::path& path,
                                 const std::string& label_column) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::FileNotFound, "cannot open " + path.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::TruncatedFile, path.string() + ": missing header");
  }
  const auto header = split_fields(line);
  const auto label_it = std::find(header.begin(), header.end(), label_column);
  if (label_it == header.end()) {
    throw Error(ErrorCode::InvalidArgument,
                path.string() + ": no column named '" + label_column + "'");
  }
  const auto label_pos = static_cast<std::size_t>(label_it - header.begin());
  const auto width = header.size();

  std::vector<double> values;
  std::vector<std::string> raw;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != width) {
      throw Error(ErrorCode::RaggedRows,
                  path.string() + ":" + std::to_string(line_no) + ": " +
                      std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(width));
    }
    for (std::size_t f = 0; f < width; ++f) {
      if (f == label_pos) {
        raw.emplace_back(fields[f]);
        continue;
      }
      double v = 0.0;
      if (!parse_double(fields[f], v) || !std::isfinite(v)) {
        throw Error(ErrorCode::NonNumericFeature,
                    path.string() + ":" + std::to_string(line_no) + ": '" +
                        std::string(fields[f]) + "' in column '" +
                        std::string(header[f]) + "'");
      }
      values.push_back(v);
    }
  }

  const auto q = static_cast<Index>(width - 1);
  const auto n = static_cast<Index>(raw.size());
  Eigen::MatrixXd columns =
      Eigen::Map<const Eigen::MatrixXd>(values.data(), q, n);
  return make_dataset(columns, raw);
}

void save_csv(const ClassPartitionedDataset& ds,
              const std::filesystem::path& path,
              const std::string& label_column) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::FileNotFound, "cannot write " + path.string());
  }
  out.precision(17);
  for (Index r = 0; r < ds.dim(); ++r) out << 'f' << r << ',';
  out << label_column << '\n';
  for (Index j = 0; j < ds.size(); ++j) {
    for (Index r = 0; r < ds.dim(); ++r) out << ds.features(r, j) << ',';
    out << ds.class_names[ds.labels[j]] << '\n';
  }
}

void SplitSpec::validate() const {
  if (per_class_train < 1) {
    throw Error(ErrorCode::InvalidArgument, "per_class_train must be >= 1");
  }
  if (trials < 1) {
    throw Error(ErrorCode::InvalidArgument, "trials must be >= 1");
  }
}

DatasetSplit draw_split(const ClassPartitionedDataset& ds,
                        const SplitSpec& spec) {
  spec.validate();
  for (int c = 0; c < ds.num_classes(); ++c) {
    if (ds.class_size(c) < spec.per_class_train) {
      throw Error(ErrorCode::InsufficientSamples,
                  "class '" + ds.class_names[c] + "' has " +
                      std::to_string(ds.class_size(c)) + " samples, " +
                      std::to_string(spec.per_class_train) + " requested");
    }
  }

  std::mt19937_64 rng(spec.seed);
  std::vector<Index> train_cols;
  std::vector<Index> rest_cols;
  for (int c = 0; c < ds.num_classes(); ++c) {
    auto range = ds.class_range(c);
    partial_shuffle(range, static_cast<std::size_t>(spec.per_class_train), rng);
    const auto cut = range.begin() + spec.per_class_train;
    train_cols.insert(train_cols.end(), range.begin(), cut);
    rest_cols.insert(rest_cols.end(), cut, range.end());
  }
  return {select_columns(ds, train_cols), select_columns(ds, rest_cols)};
}

ClassPartitionedDataset normalize_columns(const ClassPartitionedDataset& ds) {
  ClassPartitionedDataset out = ds;
  for (Index j = 0; j < out.size(); ++j) {
    const double norm = out.features.col(j).norm();
    if (norm == 0.0) {
      throw Error(ErrorCode::ZeroColumn,
                  "sample " + std::to_string(ds.source_index[j]) +
                      " is all zeros");
    }
    out.features.col(j) /= norm;
  }
  return out;
}

}  // namespace dsr
