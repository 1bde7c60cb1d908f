#include "ahcl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include <json.hpp>

namespace ahcl::eval {

namespace {

void check_pair(const Labels& truth, const Labels& predicted) {
  if (truth.size() != predicted.size()) {
    throw std::invalid_argument("label vectors differ in length (" + std::to_string(truth.size()) +
                                " vs " + std::to_string(predicted.size()) + ")");
  }
  if (truth.empty()) throw std::invalid_argument("label vectors are empty");
}

std::vector<int> compact(const Labels& labels, int& k) {
  std::map<int, int> ids;
  for (int l : labels) ids.emplace(l, 0);
  int next = 0;
  for (auto& [id, slot] : ids) slot = next++;
  k = next;
  std::vector<int> out;
  out.reserve(labels.size());
  for (int l : labels) out.push_back(ids[l]);
  return out;
}

double entropy(const Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>& counts, double n) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < counts.size(); ++i) {
    if (counts(i) == 0) continue;
    const double c = static_cast<double>(counts(i));
    // Same arithmetic as the mutual-information terms so that identical
    // partitions give I == H bit for bit.
    h += c / n * std::log(c * n / (c * c));
  }
  return h;
}

}  // namespace

ContingencyTable contingency(const Labels& truth, const Labels& predicted) {
  check_pair(truth, predicted);
  int kt = 0;
  int kp = 0;
  const auto t = compact(truth, kt);
  const auto p = compact(predicted, kp);
  ContingencyTable table;
  table.counts.setZero(kt, kp);
  for (std::size_t i = 0; i < t.size(); ++i) ++table.counts(t[i], p[i]);
  table.n = static_cast<std::int64_t>(t.size());
  return table;
}

std::vector<int> hungarian(const Matrix& cost) {
  if (cost.rows() != cost.cols()) throw std::invalid_argument("hungarian: cost matrix must be square");
  if (!cost.allFinite()) throw std::invalid_argument("hungarian: cost matrix must be finite");
  const int n = static_cast<int>(cost.rows());
  if (n == 0) return {};

  // Shortest augmenting path with row/column potentials, 1-based internally.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match_col(n + 1, 0), way(n + 1, 0);
  for (int row = 1; row <= n; ++row) {
    match_col[0] = row;
    int col0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[col0] = 1;
      const int row0 = match_col[col0];
      double delta = inf;
      int col1 = 0;
      for (int col = 1; col <= n; ++col) {
        if (used[col]) continue;
        const double reduced = cost(row0 - 1, col - 1) - u[row0] - v[col];
        if (reduced < minv[col]) {
          minv[col] = reduced;
          way[col] = col0;
        }
        if (minv[col] < delta) {
          delta = minv[col];
          col1 = col;
        }
      }
      for (int col = 0; col <= n; ++col) {
        if (used[col]) {
          u[match_col[col]] += delta;
          v[col] -= delta;
        } else {
          minv[col] -= delta;
        }
      }
      col0 = col1;
    } while (match_col[col0] != 0);
    do {
      const int col1 = way[col0];
      match_col[col0] = match_col[col1];
      col0 = col1;
    } while (col0 != 0);
  }

  std::vector<int> assignment(static_cast<std::size_t>(n), -1);
  for (int col = 1; col <= n; ++col) assignment[static_cast<std::size_t>(match_col[col] - 1)] = col - 1;
  return assignment;
}

double clustering_accuracy(const Labels& truth, const Labels& predicted) {
  const ContingencyTable table = contingency(truth, predicted);
  const Eigen::Index size = std::max(table.counts.rows(), table.counts.cols());
  // Rows are predicted clusters, columns true classes; padding cells are 0.
  Matrix cost = Matrix::Zero(size, size);
  for (Eigen::Index t = 0; t < table.counts.rows(); ++t)
    for (Eigen::Index p = 0; p < table.counts.cols(); ++p)
      cost(p, t) = -static_cast<double>(table.counts(t, p));
  const auto assignment = hungarian(cost);
  std::int64_t matched = 0;
  for (Eigen::Index p = 0; p < size; ++p) {
    const Eigen::Index t = assignment[static_cast<std::size_t>(p)];
    if (p < table.counts.cols() && t < table.counts.rows()) matched += table.counts(t, p);
  }
  return static_cast<double>(matched) / static_cast<double>(table.n);
}

double nmi(const Labels& truth, const Labels& predicted) {
  const ContingencyTable table = contingency(truth, predicted);
  const auto n = static_cast<double>(table.n);
  const Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> row_counts = table.counts.rowwise().sum();
  const Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> col_counts =
      table.counts.colwise().sum().transpose();
  const double h_true = entropy(row_counts, n);
  const double h_pred = entropy(col_counts, n);
  const bool true_single = row_counts.size() == 1;
  const bool pred_single = col_counts.size() == 1;
  if (true_single && pred_single) return 1.0;
  if (true_single || pred_single) return 0.0;

  double mi = 0.0;
  for (Eigen::Index t = 0; t < table.counts.rows(); ++t) {
    for (Eigen::Index p = 0; p < table.counts.cols(); ++p) {
      const auto c = table.counts(t, p);
      if (c == 0) continue;
      const double joint = static_cast<double>(c);
      mi += joint / n *
            std::log(joint * n / (static_cast<double>(row_counts(t)) * static_cast<double>(col_counts(p))));
    }
  }
  const double value = mi / std::max(h_true, h_pred);
  return std::clamp(value, 0.0, 1.0);
}

MetricReport evaluate(const Labels& truth, const Labels& predicted) {
  return MetricReport{clustering_accuracy(truth, predicted), nmi(truth, predicted)};
}

std::string metric_json_line(const std::string& dataset, const std::string& method,
                             std::int64_t seed, const MetricReport& report) {
  nlohmann::ordered_json j;
  j["dataset"] = dataset;
  j["method"] = method;
  j["seed"] = seed;
  j["acc"] = report.acc;
  j["nmi"] = report.nmi;
  return j.dump();
}

}  // namespace ahcl::eval
