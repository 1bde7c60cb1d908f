#include "ahcl/graph.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include "ahcl/errors.hpp"

namespace ahcl::graph {

AffinityGraph::AffinityGraph(Matrix weights) : y_(std::move(weights)) {
  if (y_.rows() != y_.cols()) throw std::invalid_argument("AffinityGraph: matrix must be square");
  if (!y_.allFinite()) throw std::invalid_argument("AffinityGraph: non-finite weights");
  const Eigen::Index n = y_.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (y_(i, i) != 1.0) throw std::invalid_argument("AffinityGraph: diagonal must be 1");
    for (Eigen::Index j = 0; j < n; ++j) {
      const double w = y_(i, j);
      if (w < 0.0 || w > 1.0) throw std::invalid_argument("AffinityGraph: weights must lie in [0,1]");
      if (w != y_(j, i)) throw std::invalid_argument("AffinityGraph: matrix must be symmetric");
    }
  }
}

AffinityGraph affinity_from_embeddings(const Matrix& z, Margin m, double epsilon) {
  return AffinityGraph(soft_labels(z, m, epsilon));
}

AffinityGraph gaussian_affinity(const Matrix& points, double sigma) {
  const Matrix d = pairwise_distance(points);
  const Eigen::Index n = d.rows();
  if (!(sigma > 0.0)) {
    std::vector<double> off;
    off.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = j + 1; i < n; ++i) off.push_back(d(i, j));
    sigma = 1.0;
    if (!off.empty()) {
      auto mid = off.begin() + static_cast<std::ptrdiff_t>(off.size() / 2);
      std::nth_element(off.begin(), mid, off.end());
      if (*mid > 0.0) sigma = *mid;
    }
  }
  const double denom = 2.0 * sigma * sigma;
  Matrix y(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    y(j, j) = 1.0;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double w = std::exp(-d(i, j) * d(i, j) / denom);
      y(i, j) = w;
      y(j, i) = w;
    }
  }
  return AffinityGraph(std::move(y));
}

Matrix normalized_laplacian(const AffinityGraph& graph) {
  const Matrix& y = graph.weights();
  const Vector inv_sqrt_degree = y.rowwise().sum().cwiseSqrt().cwiseInverse();
  const Eigen::Index n = y.rows();
  Matrix l = -(inv_sqrt_degree.asDiagonal() * y * inv_sqrt_degree.asDiagonal());
  l.diagonal().array() += 1.0;
  // Exact symmetry; the products above can differ in the last ulp.
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double v = 0.5 * (l(i, j) + l(j, i));
      l(i, j) = v;
      l(j, i) = v;
    }
  return l;
}

SymmetricEigen symmetric_eigen(const Matrix& m) {
  if (m.rows() != m.cols()) throw std::invalid_argument("symmetric_eigen: matrix must be square");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw EigensolverError("symmetric_eigen: QL iteration did not converge for n=" +
                           std::to_string(m.rows()));
  }
  return SymmetricEigen{solver.eigenvalues(), solver.eigenvectors()};
}

double kmeans_objective(const Matrix& points, const Labels& labels, const Matrix& centroids) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    total += (points.row(i) - centroids.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
  }
  return total;
}

namespace {

struct LloydRun {
  Labels labels;
  Matrix centroids;
  double objective = std::numeric_limits<double>::infinity();
  int iterations = 0;
  std::vector<double> trace;
};

Matrix plus_plus_seeds(const Matrix& points, int k, std::mt19937_64& rng) {
  const Eigen::Index n = points.rows();
  Matrix centroids(k, points.cols());
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  centroids.row(0) = points.row(pick(rng));
  Vector nearest(n);
  for (Eigen::Index i = 0; i < n; ++i) nearest(i) = (points.row(i) - centroids.row(0)).squaredNorm();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int c = 1; c < k; ++c) {
    const double total = nearest.sum();
    Eigen::Index chosen = 0;
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double acc = 0.0;
      chosen = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += nearest(i);
        if (acc > target && nearest(i) > 0.0) {
          chosen = i;
          break;
        }
      }
      // Never pick an already-covered point when an uncovered one exists.
      while (nearest(chosen) == 0.0 && chosen > 0) --chosen;
    } else {
      chosen = pick(rng);
    }
    centroids.row(c) = points.row(chosen);
    for (Eigen::Index i = 0; i < n; ++i) {
      nearest(i) = std::min(nearest(i), (points.row(i) - centroids.row(c)).squaredNorm());
    }
  }
  return centroids;
}

// Returns true when any label changed.
bool assign(const Matrix& points, const Matrix& centroids, Labels& labels) {
  bool changed = false;
  const Eigen::Index k = centroids.rows();
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    int best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < k; ++c) {
      const double dist = (points.row(i) - centroids.row(c)).squaredNorm();
      if (dist < best_dist) {
        best_dist = dist;
        best = static_cast<int>(c);
      }
    }
    auto& slot = labels[static_cast<std::size_t>(i)];
    if (slot != best) {
      slot = best;
      changed = true;
    }
  }
  return changed;
}

void update(const Matrix& points, const Labels& labels, Matrix& centroids) {
  const Eigen::Index k = centroids.rows();
  Matrix sums = Matrix::Zero(k, points.cols());
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const int c = labels[static_cast<std::size_t>(i)];
    sums.row(c) += points.row(i);
    ++counts[static_cast<std::size_t>(c)];
  }
  for (Eigen::Index c = 0; c < k; ++c) {
    if (counts[static_cast<std::size_t>(c)] > 0) {
      centroids.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
    }
  }
  for (Eigen::Index c = 0; c < k; ++c) {
    if (counts[static_cast<std::size_t>(c)] > 0) continue;
    Eigen::Index farthest = 0;
    double far_dist = -1.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      const double dist =
          (points.row(i) - centroids.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
      if (dist > far_dist) {
        far_dist = dist;
        farthest = i;
      }
    }
    centroids.row(c) = points.row(farthest);
  }
}

LloydRun lloyd(const Matrix& points, Matrix centroids, int max_iters) {
  LloydRun run;
  run.labels.assign(static_cast<std::size_t>(points.rows()), -1);
  assign(points, centroids, run.labels);
  run.trace.push_back(kmeans_objective(points, run.labels, centroids));
  for (int iter = 0; iter < max_iters; ++iter) {
    update(points, run.labels, centroids);
    run.iterations = iter + 1;
    const bool changed = assign(points, centroids, run.labels);
    run.trace.push_back(kmeans_objective(points, run.labels, centroids));
    if (!changed) break;
  }
  run.objective = run.trace.back();
  run.centroids = std::move(centroids);
  return run;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed, const KMeansOptions& options) {
  const Eigen::Index n = points.rows();
  if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
  if (k > n) {
    throw std::invalid_argument("kmeans: k=" + std::to_string(k) + " exceeds point count " +
                                std::to_string(n));
  }
  if (!points.allFinite()) throw std::invalid_argument("kmeans: points must be finite");
  if (options.restarts < 1 || options.max_iters < 0) {
    throw std::invalid_argument("kmeans: restarts must be >= 1 and max_iters >= 0");
  }
  std::mt19937_64 rng(seed);
  LloydRun best;
  for (int r = 0; r < options.restarts; ++r) {
    LloydRun run = lloyd(points, plus_plus_seeds(points, k, rng), options.max_iters);
    if (run.objective < best.objective) best = std::move(run);
  }
  return KMeansResult{std::move(best.labels), std::move(best.centroids), best.objective,
                      best.iterations, std::move(best.trace)};
}

Matrix spectral_embedding(const AffinityGraph& graph, int k) {
  const Eigen::Index n = graph.size();
  if (k < 1 || k > n) {
    throw std::invalid_argument("spectral_clustering: k=" + std::to_string(k) +
                                " must lie in [1, " + std::to_string(n) + "]");
  }
  const SymmetricEigen eig = symmetric_eigen(normalized_laplacian(graph));
  Matrix u = eig.vectors.leftCols(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double norm = u.row(i).norm();
    if (norm > 0.0) u.row(i) /= norm;
  }
  return u;
}

Labels spectral_clustering(const AffinityGraph& graph, int k, std::uint64_t seed,
                           const KMeansOptions& options) {
  return kmeans(spectral_embedding(graph, k), k, seed, options).labels;
}

}  // namespace ahcl::graph
