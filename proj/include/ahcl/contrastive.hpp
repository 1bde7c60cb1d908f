#pragma once

// Margin-based contrastive costs with adaptive soft labels, the reconstruction
// loss and their combination.

#include "ahcl/homotopy.hpp"
#include "ahcl/types.hpp"

namespace ahcl {

class Margin {
 public:
  explicit Margin(double m);
  double value() const noexcept { return m_; }

 private:
  double m_;
};

/// How the n*n double sum of the contrastive loss is normalized.
enum class PairScaling {
  kHalfN,    // 1/(2n), as written for the loss
  kPairMean  // 1/n^2, independent of batch size
};

struct LossReport {
  double ahcl = 0.0;
  double mse = 0.0;
  double total = 0.0;
  double gamma = 0.0;
};

struct LossAndGradient {
  double loss = 0.0;
  Matrix gradient;
};

/// d_ij = ||z_i - z_j||_2, computed entry by entry so that identical rows give
/// exactly zero distance. Symmetric with zero diagonal.
Matrix pairwise_distance(const Matrix& z);

/// f = d^2, g = max(m - d, 0)^2.
HomotopyPair contrastive_fg(double d, Margin m);

/// 0 if d >= m, 1 if d <= epsilon, otherwise g/(f+g) of contrastive_fg.
double adaptive_label(double d, Margin m, double epsilon = kDefaultEpsilon);

/// Y[i][j] = adaptive_label(d_ij). Symmetric, unit diagonal, entries in [0,1].
Matrix soft_labels(const Matrix& z, Margin m, double epsilon = kDefaultEpsilon);
Matrix soft_labels_from_distances(const Matrix& d, Margin m, double epsilon = kDefaultEpsilon);

/// Contrastive loss sum_ij y_ij d_ij^2 + (1 - y_ij) max(m - d_ij, 0)^2 scaled
/// per `scaling`, with the labels held fixed at `labels`. The gradient is with
/// respect to z under that stop-gradient convention.
LossAndGradient ahcl_loss_frozen(const Matrix& z, const Matrix& labels, Margin m,
                                 PairScaling scaling = PairScaling::kHalfN);

/// Recomputes the labels from z, then evaluates ahcl_loss_frozen.
LossAndGradient ahcl_loss(const Matrix& z, Margin m, double epsilon = kDefaultEpsilon,
                          PairScaling scaling = PairScaling::kHalfN);

/// (1/n) * sum (x - xhat)^2 with gradient (2/n)(xhat - x) w.r.t. xhat.
LossAndGradient mse_loss(const Matrix& x, const Matrix& xhat);

/// total = ahcl + gamma * mse.
LossReport total_loss(double ahcl, double mse, double gamma);

}  // namespace ahcl
