#include "ahcl/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ahcl/errors.hpp"

namespace ahcl {

Margin::Margin(double m) : m_(m) {
  if (!(m > 0.0) || !std::isfinite(m)) throw std::invalid_argument("Margin: m must be > 0");
}

Matrix pairwise_distance(const Matrix& z) {
  if (!z.allFinite()) throw std::invalid_argument("pairwise_distance: embedding is not finite");
  const Eigen::Index n = z.rows();
  // Columns of the transpose are contiguous rows of z.
  const Matrix zt = z.transpose();
  Matrix d = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double dist = (zt.col(i) - zt.col(j)).norm();
      d(i, j) = dist;
      d(j, i) = dist;
    }
  }
  return d;
}

HomotopyPair contrastive_fg(double d, Margin m) {
  if (!(d >= 0.0)) throw std::invalid_argument("contrastive_fg: distance must be >= 0");
  const double slack = std::max(m.value() - d, 0.0);
  return HomotopyPair(d * d, slack * slack);
}

double adaptive_label(double d, Margin m, double epsilon) {
  if (!(d >= 0.0)) throw std::invalid_argument("adaptive_label: distance must be >= 0");
  if (d >= m.value()) return 0.0;
  if (d <= epsilon) return 1.0;
  const HomotopyPair pair = contrastive_fg(d, m);
  return pair.g() / (pair.f() + pair.g());
}

Matrix soft_labels_from_distances(const Matrix& d, Margin m, double epsilon) {
  const Eigen::Index n = d.rows();
  Matrix y(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    y(j, j) = 1.0;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double label = adaptive_label(d(i, j), m, epsilon);
      y(i, j) = label;
      y(j, i) = label;
    }
  }
  return y;
}

Matrix soft_labels(const Matrix& z, Margin m, double epsilon) {
  return soft_labels_from_distances(pairwise_distance(z), m, epsilon);
}

namespace {

double pair_scale(Eigen::Index n, PairScaling scaling) {
  const auto nn = static_cast<double>(n);
  return scaling == PairScaling::kHalfN ? 1.0 / (2.0 * nn) : 1.0 / (nn * nn);
}

}  // namespace

LossAndGradient ahcl_loss_frozen(const Matrix& z, const Matrix& labels, Margin m,
                                 PairScaling scaling) {
  const Eigen::Index n = z.rows();
  if (n < 2) throw std::invalid_argument("ahcl_loss: need at least two embeddings");
  if (labels.rows() != n || labels.cols() != n) {
    throw std::invalid_argument("ahcl_loss: label matrix must be n x n");
  }
  const Matrix d = pairwise_distance(z);
  const double margin = m.value();

  // Each unordered pair appears twice in the double sum; the diagonal
  // contributes y_ii * 0 + (1 - y_ii) * m^2, which is zero for unit labels.
  // weights(i, j) = (dT/dd) / d for the pair term T(d).
  Matrix weights = Matrix::Zero(n, n);
  double sum = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    {
      const double y = labels(j, j);
      sum += (1.0 - y) * margin * margin;
    }
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double dist = d(i, j);
      const double y = labels(i, j);
      const double slack = std::max(margin - dist, 0.0);
      sum += 2.0 * (y * dist * dist + (1.0 - y) * slack * slack);
      double w = 2.0 * y;
      if (slack > 0.0 && dist > 0.0) w -= 2.0 * (1.0 - y) * slack / dist;
      weights(i, j) = w;
      weights(j, i) = w;
    }
  }
  const double scale = pair_scale(n, scaling);
  LossAndGradient out;
  out.loss = scale * sum;
  if (!std::isfinite(out.loss)) throw DivergenceError("ahcl_loss: non-finite loss");
  // dL/dz_i = scale * 2 * sum_j w_ij (z_i - z_j)
  const Vector row_sums = weights.rowwise().sum();
  out.gradient = (2.0 * scale) * (row_sums.asDiagonal() * z - weights * z);
  return out;
}

LossAndGradient ahcl_loss(const Matrix& z, Margin m, double epsilon, PairScaling scaling) {
  return ahcl_loss_frozen(z, soft_labels(z, m, epsilon), m, scaling);
}

LossAndGradient mse_loss(const Matrix& x, const Matrix& xhat) {
  if (x.rows() != xhat.rows() || x.cols() != xhat.cols()) {
    throw std::invalid_argument("mse_loss: shape mismatch (" + std::to_string(x.rows()) + "x" +
                                std::to_string(x.cols()) + " vs " + std::to_string(xhat.rows()) +
                                "x" + std::to_string(xhat.cols()) + ")");
  }
  if (x.rows() == 0) throw std::invalid_argument("mse_loss: empty input");
  const auto n = static_cast<double>(x.rows());
  const Matrix diff = xhat - x;
  LossAndGradient out;
  out.loss = diff.squaredNorm() / n;
  out.gradient = (2.0 / n) * diff;
  return out;
}

LossReport total_loss(double ahcl, double mse, double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("total_loss: gamma must be > 0");
  return LossReport{ahcl, mse, ahcl + gamma * mse, gamma};
}

}  // namespace ahcl
