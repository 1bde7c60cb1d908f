#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ahcl/types.hpp"

namespace ahcl::eval {

/// counts(t, p) = number of samples with true label t and predicted label p,
/// after both label sets are compacted to 0..k-1 in order of first appearance
/// of the sorted distinct ids.
struct ContingencyTable {
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> counts;
  std::int64_t n = 0;
};

ContingencyTable contingency(const Labels& truth, const Labels& predicted);

/// Minimum-cost perfect assignment on a square matrix. Returns assignment[row] = column.
std::vector<int> hungarian(const Matrix& cost);

/// Fraction of samples correctly labeled under the best one-to-one mapping
/// from predicted to true labels.
double clustering_accuracy(const Labels& truth, const Labels& predicted);

/// I(l;c) / max(H(l), H(c)), natural logs. 1 when both partitions are a
/// single cluster, 0 when exactly one of them is.
double nmi(const Labels& truth, const Labels& predicted);

struct MetricReport {
  double acc = 0.0;
  double nmi = 0.0;
};

MetricReport evaluate(const Labels& truth, const Labels& predicted);

/// {"dataset", "method", "seed", "acc", "nmi"} on a single line.
std::string metric_json_line(const std::string& dataset, const std::string& method,
                             std::int64_t seed, const MetricReport& report);

}  // namespace ahcl::eval
