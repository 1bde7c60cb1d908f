#pragma once

#include <cstdint>
#include <vector>

#include "ahcl/contrastive.hpp"
#include "ahcl/types.hpp"

namespace ahcl::graph {

/// Weighted graph over samples: symmetric, unit diagonal, weights in [0,1].
class AffinityGraph {
 public:
  explicit AffinityGraph(Matrix weights);
  const Matrix& weights() const noexcept { return y_; }
  Eigen::Index size() const noexcept { return y_.rows(); }

 private:
  Matrix y_;
};

/// Soft-label graph of the embeddings.
AffinityGraph affinity_from_embeddings(const Matrix& z, Margin m,
                                       double epsilon = kDefaultEpsilon);

/// exp(-d^2 / (2 sigma^2)); sigma <= 0 selects the median off-diagonal
/// pairwise distance (falling back to 1 when all points coincide).
AffinityGraph gaussian_affinity(const Matrix& points, double sigma = 0.0);

/// I - D^{-1/2} Y D^{-1/2}, degrees including the self-loop.
Matrix normalized_laplacian(const AffinityGraph& graph);

struct SymmetricEigen {
  Vector values;   // ascending
  Matrix vectors;  // columns, matching values
};

/// Dense symmetric eigendecomposition (Householder tridiagonalization with
/// implicit QL iterations). Throws EigensolverError on non-convergence.
SymmetricEigen symmetric_eigen(const Matrix& m);

struct KMeansOptions {
  int restarts = 10;
  int max_iters = 300;
};

struct KMeansResult {
  Labels labels;
  Matrix centroids;
  double objective = 0.0;
  int iterations = 0;
  /// Objective after each assignment step of the winning restart.
  std::vector<double> objective_trace;
};

/// Lloyd iterations with k-means++ seeding; best of `restarts` runs by
/// objective. Ties go to the lowest centroid index; an empty cluster is
/// reseeded at the point farthest from its current centroid.
KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed,
                    const KMeansOptions& options = {});

/// Sum of squared distances from each point to its assigned centroid.
double kmeans_objective(const Matrix& points, const Labels& labels, const Matrix& centroids);

/// k eigenvectors of the normalized Laplacian with smallest eigenvalues,
/// row-normalized, then k-means on the rows.
Labels spectral_clustering(const AffinityGraph& graph, int k, std::uint64_t seed,
                           const KMeansOptions& options = {});

/// Row-normalized spectral embedding used by spectral_clustering.
Matrix spectral_embedding(const AffinityGraph& graph, int k);

}  // namespace ahcl::graph
