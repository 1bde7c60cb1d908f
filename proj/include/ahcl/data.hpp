#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ahcl/errors.hpp"
#include "ahcl/types.hpp"

namespace ahcl::data {

struct Dataset {
  Matrix x;                     // n x p, rows are samples
  std::optional<Labels> labels;  // length n when present
  std::string name;

  Eigen::Index size() const { return x.rows(); }
  Eigen::Index dim() const { return x.cols(); }
  void validate() const;
};

enum class CsvErrorKind { kIo, kMalformedRow, kNonNumeric, kRaggedWidth, kNonFinite, kBadLabel, kEmpty };

class CsvError : public DataError {
 public:
  CsvError(CsvErrorKind kind, std::size_t line, const std::string& message);
  CsvErrorKind kind() const noexcept { return kind_; }
  /// 1-based line number in the file, 0 when not tied to a line.
  std::size_t line() const noexcept { return line_; }

 private:
  CsvErrorKind kind_;
  std::size_t line_;
};

struct CsvOptions {
  bool has_header = false;
  /// Column holding an integer ground-truth label; negative counts from the end.
  std::optional<int> label_column;
};

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options = {});
Dataset parse_csv(const std::string& text, const CsvOptions& options = {},
                  const std::string& name = "inline");

/// Writes features (and labels as a trailing column when present) with
/// shortest round-trip decimal text. Written to a temporary file first and
/// renamed into place.
void save_csv(const std::filesystem::path& path, const Dataset& dataset);
void save_matrix_csv(const std::filesystem::path& path, const Matrix& m);
Matrix load_matrix_csv(const std::filesystem::path& path);

void save_labels(const std::filesystem::path& path, const Labels& labels);
Labels load_labels(const std::filesystem::path& path);

/// Per-feature (x - min)/(max - min); constant features map to 0.
Matrix minmax_normalize(const Matrix& x);

struct FeatureRange {
  Vector min;
  Vector max;
};
FeatureRange feature_range(const Matrix& x);
Matrix apply_range(const Matrix& x, const FeatureRange& range);

struct BlobOptions {
  int n_per_cluster = 100;
  int clusters = 4;
  int dim = 16;
  double spread = 1.0;
  double separation = 6.0;
  std::uint64_t seed = 0;
};

/// Isotropic Gaussian clusters whose centers are pairwise at least
/// `separation` apart, labels attached.
Dataset synthetic_blobs(const BlobOptions& options);

using Batch = std::vector<Eigen::Index>;

/// `batches` uniform subsets of size batch_size drawn without replacement.
std::vector<Batch> sample_batches(Eigen::Index n, Eigen::Index batch_size, int batches,
                                  std::uint64_t seed);

Matrix gather_rows(const Matrix& x, const Batch& batch);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// Writes `content` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace ahcl::data
