#pragma once

// Adaptive homotopy framework: a linear homotopy y*f + (1-y)*g whose ratio
// coefficient y is set in closed form from the logarithmic (Maclaurin) dual
// instead of being fixed a priori.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "ahcl/errors.hpp"
#include "ahcl/types.hpp"

namespace ahcl {

inline constexpr double kDefaultEpsilon = 1e-12;

/// Cost pair (f, g): f is the cost of scenario S, g the cost of not-S.
class HomotopyPair {
 public:
  HomotopyPair(double f, double g);
  double f() const noexcept { return f_; }
  double g() const noexcept { return g_; }

 private:
  double f_;
  double g_;
};

class AdaptiveWeight {
 public:
  explicit AdaptiveWeight(double y);
  double value() const noexcept { return y_; }
  operator double() const noexcept { return y_; }

 private:
  double y_;
};

struct HomotopyConfig {
  double epsilon = kDefaultEpsilon;
  int max_iters = 100;
  double tol = 1e-9;  // relative objective change; 0 runs all max_iters

  void validate() const;
};

/// Closed-form minimizer of the dual objective over y, g/(f+g), with the
/// degenerate limits resolved against epsilon: g <= eps gives 0, f <= eps
/// gives 1, and both <= eps gives 0.5.
AdaptiveWeight adaptive_weight(const HomotopyPair& pair,
                               double epsilon = kDefaultEpsilon);

/// y*f + (1-y)*g.
double decoupled_objective(AdaptiveWeight y, const HomotopyPair& pair);

/// -ln(1-y)*f - ln(y)*g, defined for y strictly inside (0, 1).
double maclaurin_dual_objective(double y, const HomotopyPair& pair);

/// -sum_{k=1..n_terms} y^k / k, the truncated series of ln(1-y).
double maclaurin_partial_sum(double y, int n_terms);

// ---------------------------------------------------------------------------
// Alternating optimization loop.

/// One item's cost pair with the gradients of f and g with respect to the
/// item's embedding row.
struct PairEvaluation {
  HomotopyPair pair;
  RowVector grad_f;
  RowVector grad_g;
};

using PairObjective =
    std::function<PairEvaluation(const RowVector& embedding, const RowVector& input)>;

/// A model mapping inputs (rows of X) to embeddings that can take a gradient
/// step given dLoss/dZ.
template <class M>
concept DifferentiableEmbedder = requires(M model, const Matrix& x, const Matrix& grad) {
  { model.embed(x) } -> std::convertible_to<Matrix>;
  model.descend(x, grad);
};

struct HomotopyResult {
  Matrix embeddings;
  std::vector<double> weights;
  std::vector<double> objective_trace;  // mean decoupled objective per iteration
  int iterations = 0;
  bool converged = false;
};

/// Each row of the embedding is a free parameter updated by plain gradient
/// descent; the input is ignored after initialization.
class FreeEmbedding {
 public:
  FreeEmbedding(Matrix initial, double learning_rate);
  Matrix embed(const Matrix& x) const;
  void descend(const Matrix& x, const Matrix& grad);

 private:
  Matrix z_;
  double lr_;
};

/// Ignores both input and gradient; always produces the same embedding.
class ConstantEmbedding {
 public:
  explicit ConstantEmbedding(Matrix z) : z_(std::move(z)) {}
  Matrix embed(const Matrix&) const { return z_; }
  void descend(const Matrix&, const Matrix&) {}

 private:
  Matrix z_;
};

namespace detail {
void check_finite_objective(double value, int iteration);
}

/// Alternates (a) per-item cost pairs, (b) closed-form weight update and
/// (c) one gradient step on the decoupled objective with weights frozen,
/// until the relative objective change drops below tol or max_iters is hit.
template <DifferentiableEmbedder Model>
HomotopyResult run_adaptive_homotopy(const PairObjective& objective, Model& model,
                                     const Matrix& data, const HomotopyConfig& config) {
  config.validate();
  const auto n = static_cast<std::size_t>(data.rows());
  HomotopyResult result;
  result.weights.assign(n, 0.5);

  auto evaluate = [&](const Matrix& z, Matrix* grad) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      PairEvaluation eval = objective(z.row(row), data.row(row));
      const AdaptiveWeight y = adaptive_weight(eval.pair, config.epsilon);
      result.weights[i] = y;
      total += decoupled_objective(y, eval.pair);
      if (grad != nullptr) {
        grad->row(row) = y * eval.grad_f + (1.0 - y) * eval.grad_g;
      }
    }
    return n == 0 ? 0.0 : total / static_cast<double>(n);
  };

  double previous = 0.0;
  for (int iter = 0; iter < config.max_iters; ++iter) {
    Matrix z = model.embed(data);
    Matrix grad(z.rows(), z.cols());
    const double value = evaluate(z, &grad);
    detail::check_finite_objective(value, iter);
    if (!all_finite(grad)) {
      throw DivergenceError("non-finite gradient at iteration " + std::to_string(iter), iter);
    }
    result.objective_trace.push_back(value);
    result.iterations = iter + 1;
    if (iter > 0) {
      const double scale = std::max(std::abs(previous), config.epsilon);
      if (std::abs(previous - value) / scale < config.tol) {
        result.converged = true;
        break;
      }
    }
    previous = value;
    model.descend(data, grad);
  }

  result.embeddings = model.embed(data);
  const double final_value = evaluate(result.embeddings, nullptr);
  detail::check_finite_objective(final_value, result.iterations);
  return result;
}

}  // namespace ahcl
