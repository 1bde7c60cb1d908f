#include "ahcl/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <system_error>

namespace ahcl::data {

namespace fs = std::filesystem;

void Dataset::validate() const {
  if (!x.allFinite()) throw DataError("dataset '" + name + "' has non-finite features");
  if (labels && static_cast<Eigen::Index>(labels->size()) != x.rows()) {
    throw DataError("dataset '" + name + "' label count does not match sample count");
  }
}

namespace {

const char* kind_name(CsvErrorKind kind) {
  switch (kind) {
    case CsvErrorKind::kIo: return "io error";
    case CsvErrorKind::kMalformedRow: return "malformed row";
    case CsvErrorKind::kNonNumeric: return "non-numeric cell";
    case CsvErrorKind::kRaggedWidth: return "ragged row width";
    case CsvErrorKind::kNonFinite: return "non-finite value";
    case CsvErrorKind::kBadLabel: return "invalid label";
    case CsvErrorKind::kEmpty: return "empty file";
  }
  return "csv error";
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_cell(std::string_view cell, std::size_t line, std::size_t column) {
  const std::string_view text = trim(cell);
  const auto where = " (column " + std::to_string(column + 1) + ")";
  if (text.empty()) throw CsvError(CsvErrorKind::kMalformedRow, line, "empty cell" + where);
  std::string_view digits = text;
  if (digits.front() == '+') digits.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec == std::errc::result_out_of_range) {
    throw CsvError(CsvErrorKind::kNonFinite, line, "value out of range '" + std::string(text) + "'" + where);
  }
  if (ec != std::errc() || ptr != digits.data() + digits.size()) {
    throw CsvError(CsvErrorKind::kNonNumeric, line, "cannot parse '" + std::string(text) + "'" + where);
  }
  if (!std::isfinite(value)) {
    throw CsvError(CsvErrorKind::kNonFinite, line, "non-finite value '" + std::string(text) + "'" + where);
  }
  return value;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CsvError(CsvErrorKind::kIo, 0, "cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

CsvError::CsvError(CsvErrorKind kind, std::size_t line, const std::string& message)
    : DataError(std::string(kind_name(kind)) + (line > 0 ? " at line " + std::to_string(line) : "") +
                ": " + message),
      kind_(kind),
      line_(line) {}

Dataset parse_csv(const std::string& text, const CsvOptions& options, const std::string& name) {
  std::vector<std::vector<double>> rows;
  std::vector<std::size_t> row_lines;
  std::size_t width = 0;
  std::size_t width_line = 0;
  std::size_t line_no = 0;
  bool header_pending = options.has_header;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    std::vector<double> values;
    std::string_view rest(line);
    std::size_t column = 0;
    while (true) {
      const auto comma = rest.find(',');
      values.push_back(parse_cell(rest.substr(0, comma), line_no, column++));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (rows.empty()) {
      width = values.size();
      width_line = line_no;
    } else if (values.size() != width) {
      throw CsvError(CsvErrorKind::kRaggedWidth, line_no,
                     "expected " + std::to_string(width) + " cells (as on line " +
                         std::to_string(width_line) + "), found " + std::to_string(values.size()));
    }
    rows.push_back(std::move(values));
    row_lines.push_back(line_no);
  }
  if (rows.empty()) throw CsvError(CsvErrorKind::kEmpty, 0, "no data rows in '" + name + "'");

  std::optional<std::size_t> label_col;
  if (options.label_column) {
    const int raw = *options.label_column;
    const int resolved = raw < 0 ? static_cast<int>(width) + raw : raw;
    if (resolved < 0 || resolved >= static_cast<int>(width)) {
      throw CsvError(CsvErrorKind::kBadLabel, 0,
                     "label column " + std::to_string(raw) + " outside " + std::to_string(width) +
                         " columns");
    }
    label_col = static_cast<std::size_t>(resolved);
  }
  const std::size_t features = width - (label_col ? 1 : 0);
  if (features == 0) throw CsvError(CsvErrorKind::kMalformedRow, 0, "no feature columns left");

  Dataset ds;
  ds.name = name;
  ds.x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(features));
  if (label_col) ds.labels.emplace();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    Eigen::Index c_out = 0;
    for (std::size_t c = 0; c < width; ++c) {
      if (label_col && c == *label_col) {
        const double v = rows[r][c];
        if (v != std::floor(v) || std::abs(v) > 2147483647.0) {
          throw CsvError(CsvErrorKind::kBadLabel, row_lines[r], "label is not an integer");
        }
        ds.labels->push_back(static_cast<int>(v));
      } else {
        ds.x(static_cast<Eigen::Index>(r), c_out++) = rows[r][c];
      }
    }
  }
  return ds;
}

Dataset load_csv(const fs::path& path, const CsvOptions& options) {
  return parse_csv(read_file(path), options, path.stem().string());
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, ptr);
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  const fs::path parent = path.has_parent_path() ? path.parent_path() : fs::path(".");
  if (!fs::exists(parent)) throw DataError("output directory '" + parent.string() + "' does not exist");
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw DataError("failed writing '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw DataError("cannot move output into '" + path.string() + "': " + ec.message());
  }
}

namespace {

std::string matrix_text(const Matrix& m, const Labels* labels) {
  std::string out;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c > 0) out += ',';
      out += format_double(m(r, c));
    }
    if (labels != nullptr) {
      out += ',';
      out += std::to_string((*labels)[static_cast<std::size_t>(r)]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace

void save_csv(const fs::path& path, const Dataset& dataset) {
  dataset.validate();
  write_file_atomic(path, matrix_text(dataset.x, dataset.labels ? &*dataset.labels : nullptr));
}

void save_matrix_csv(const fs::path& path, const Matrix& m) {
  write_file_atomic(path, matrix_text(m, nullptr));
}

Matrix load_matrix_csv(const fs::path& path) { return load_csv(path).x; }

void save_labels(const fs::path& path, const Labels& labels) {
  std::string out;
  for (int l : labels) {
    out += std::to_string(l);
    out += '\n';
  }
  write_file_atomic(path, out);
}

Labels load_labels(const fs::path& path) {
  const std::string text = read_file(path);
  Labels labels;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty()) continue;
    int value = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc() || ptr != t.data() + t.size()) {
      throw CsvError(CsvErrorKind::kBadLabel, line_no, "expected an integer label, got '" + std::string(t) + "'");
    }
    labels.push_back(value);
  }
  if (labels.empty()) throw CsvError(CsvErrorKind::kEmpty, 0, "no labels in '" + path.string() + "'");
  return labels;
}

FeatureRange feature_range(const Matrix& x) {
  if (x.rows() == 0) throw std::invalid_argument("feature_range: empty matrix");
  return FeatureRange{x.colwise().minCoeff().transpose(), x.colwise().maxCoeff().transpose()};
}

Matrix apply_range(const Matrix& x, const FeatureRange& range) {
  if (x.cols() != range.min.size()) throw std::invalid_argument("apply_range: feature count mismatch");
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double span = range.max(c) - range.min(c);
    if (span > 0.0) {
      out.col(c) = (x.col(c).array() - range.min(c)) / span;
    } else {
      out.col(c).setZero();
    }
  }
  return out;
}

Matrix minmax_normalize(const Matrix& x) { return apply_range(x, feature_range(x)); }

Dataset synthetic_blobs(const BlobOptions& o) {
  if (o.n_per_cluster < 1 || o.clusters < 1 || o.dim < 1 || !(o.spread > 0.0) || !(o.separation > 0.0)) {
    throw std::invalid_argument("synthetic_blobs: all arguments must be positive");
  }
  std::mt19937_64 rng(o.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix centers(o.clusters, o.dim);
  for (Eigen::Index c = 0; c < centers.rows(); ++c)
    for (Eigen::Index j = 0; j < centers.cols(); ++j) centers(c, j) = normal(rng);
  if (o.clusters > 1) {
    double closest = std::numeric_limits<double>::infinity();
    for (int a = 0; a < o.clusters; ++a)
      for (int b = a + 1; b < o.clusters; ++b) closest = std::min(closest, (centers.row(a) - centers.row(b)).norm());
    centers *= o.separation / closest;
  }

  Dataset ds;
  ds.name = "blobs";
  const Eigen::Index n = static_cast<Eigen::Index>(o.n_per_cluster) * o.clusters;
  ds.x.resize(n, o.dim);
  ds.labels.emplace();
  ds.labels->reserve(static_cast<std::size_t>(n));
  Eigen::Index row = 0;
  for (int c = 0; c < o.clusters; ++c) {
    for (int i = 0; i < o.n_per_cluster; ++i, ++row) {
      for (Eigen::Index j = 0; j < o.dim; ++j) ds.x(row, j) = centers(c, j) + o.spread * normal(rng);
      ds.labels->push_back(c);
    }
  }
  return ds;
}

std::vector<Batch> sample_batches(Eigen::Index n, Eigen::Index batch_size, int batches,
                                  std::uint64_t seed) {
  if (batch_size < 1 || batches < 0) throw std::invalid_argument("sample_batches: invalid batch shape");
  if (batch_size > n) {
    throw std::invalid_argument("sample_batches: batch size " + std::to_string(batch_size) +
                                " exceeds dataset size " + std::to_string(n));
  }
  std::mt19937_64 rng(seed);
  std::vector<Eigen::Index> pool(static_cast<std::size_t>(n));
  std::vector<Batch> out;
  out.reserve(static_cast<std::size_t>(batches));
  for (int b = 0; b < batches; ++b) {
    std::iota(pool.begin(), pool.end(), Eigen::Index{0});
    // Partial Fisher-Yates: the first batch_size slots are a uniform subset.
    for (Eigen::Index i = 0; i < batch_size; ++i) {
      std::uniform_int_distribution<Eigen::Index> pick(i, n - 1);
      std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
    }
    Batch batch(pool.begin(), pool.begin() + batch_size);
    std::sort(batch.begin(), batch.end());
    out.push_back(std::move(batch));
  }
  return out;
}

Matrix gather_rows(const Matrix& x, const Batch& batch) {
  Matrix out(static_cast<Eigen::Index>(batch.size()), x.cols());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = x.row(batch[i]);
  }
  return out;
}

}  // namespace ahcl::data
