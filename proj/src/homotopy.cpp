#include "ahcl/homotopy.hpp"

#include <cmath>
#include <string>

namespace ahcl {

bool all_finite(const Matrix& m) { return m.allFinite(); }

HomotopyPair::HomotopyPair(double f, double g) : f_(f), g_(g) {
  if (!std::isfinite(f) || !std::isfinite(g)) {
    throw std::invalid_argument("HomotopyPair: costs must be finite");
  }
  if (f < 0.0 || g < 0.0) {
    throw std::invalid_argument("HomotopyPair: costs must be non-negative");
  }
}

AdaptiveWeight::AdaptiveWeight(double y) : y_(y) {
  if (!(y >= 0.0 && y <= 1.0)) {
    throw std::invalid_argument("AdaptiveWeight: y must lie in [0, 1]");
  }
}

void HomotopyConfig::validate() const {
  if (!(epsilon > 0.0)) throw std::invalid_argument("HomotopyConfig: epsilon must be > 0");
  if (!(tol >= 0.0)) throw std::invalid_argument("HomotopyConfig: tol must be >= 0");
  // max_iters == 0 is accepted as a no-op bound.
  if (max_iters < 0) throw std::invalid_argument("HomotopyConfig: max_iters must be >= 0");
}

AdaptiveWeight adaptive_weight(const HomotopyPair& pair, double epsilon) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("adaptive_weight: epsilon must be positive and finite");
  }
  const bool g_vanishes = pair.g() <= epsilon;
  const bool f_vanishes = pair.f() <= epsilon;
  if (g_vanishes && f_vanishes) return AdaptiveWeight(0.5);
  if (g_vanishes) return AdaptiveWeight(0.0);
  if (f_vanishes) return AdaptiveWeight(1.0);
  return AdaptiveWeight(pair.g() / (pair.f() + pair.g()));
}

double decoupled_objective(AdaptiveWeight y, const HomotopyPair& pair) {
  return y.value() * pair.f() + (1.0 - y.value()) * pair.g();
}

double maclaurin_dual_objective(double y, const HomotopyPair& pair) {
  if (!(y > 0.0 && y < 1.0)) {
    throw std::invalid_argument("maclaurin_dual_objective: y must lie in (0, 1)");
  }
  return -std::log1p(-y) * pair.f() - std::log(y) * pair.g();
}

double maclaurin_partial_sum(double y, int n_terms) {
  if (!(y > 0.0 && y < 1.0)) {
    throw std::invalid_argument("maclaurin_partial_sum: y must lie in (0, 1)");
  }
  if (n_terms < 1) throw std::invalid_argument("maclaurin_partial_sum: n_terms must be >= 1");
  double power = 1.0;
  double sum = 0.0;
  for (int k = 1; k <= n_terms; ++k) {
    power *= y;
    sum += power / k;
  }
  return -sum;
}

FreeEmbedding::FreeEmbedding(Matrix initial, double learning_rate)
    : z_(std::move(initial)), lr_(learning_rate) {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("FreeEmbedding: learning rate must be > 0");
}

Matrix FreeEmbedding::embed(const Matrix&) const { return z_; }

void FreeEmbedding::descend(const Matrix&, const Matrix& grad) { z_ -= lr_ * grad; }

namespace detail {
void check_finite_objective(double value, int iteration) {
  if (!std::isfinite(value)) {
    throw DivergenceError("non-finite objective at iteration " + std::to_string(iteration),
                          iteration);
  }
}
}  // namespace detail

}  // namespace ahcl
