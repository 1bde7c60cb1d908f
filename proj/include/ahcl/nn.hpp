#pragma once

// Small fully connected network with hand-written backpropagation and Adam.
// Rows of every activation matrix are samples.

#include <cstdint>
#include <string>
#include <vector>

#include "ahcl/types.hpp"

namespace ahcl::nn {

enum class Activation : std::uint8_t { kIdentity = 0, kRelu = 1, kSigmoid = 2 };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

struct LayerSpec {
  int in_dim = 0;
  int out_dim = 0;
  Activation activation = Activation::kIdentity;
};

struct Layer {
  Matrix weight;  // out_dim x in_dim
  Vector bias;    // out_dim
  Activation activation = Activation::kIdentity;

  int in_dim() const { return static_cast<int>(weight.cols()); }
  int out_dim() const { return static_cast<int>(weight.rows()); }
};

struct MlpModel {
  std::vector<Layer> layers;
  std::uint64_t seed = 0;

  int in_dim() const;
  int out_dim() const;
  std::vector<LayerSpec> specs() const;
  std::size_t parameter_count() const;
  /// Throws if dimensions do not chain or any parameter is non-finite.
  void validate() const;
};

/// Inputs and pre-activations of each layer, kept for backward().
struct ForwardCache {
  std::vector<Matrix> inputs;
  std::vector<Matrix> pre_activations;
  Matrix output;
  const MlpModel* model = nullptr;
};

struct Gradients {
  std::vector<Matrix> weight;
  std::vector<Vector> bias;

  static Gradients zeros_like(const MlpModel& model);
  bool all_finite() const;
  Gradients& operator+=(const Gradients& other);
};

struct BackwardResult {
  Gradients params;
  Matrix grad_input;
};

/// He-normal weights for relu layers, Xavier-normal otherwise, zero biases.
MlpModel init_model(const std::vector<LayerSpec>& specs, std::uint64_t seed);

Matrix forward(const MlpModel& model, const Matrix& x);
ForwardCache forward_cached(const MlpModel& model, const Matrix& x);
BackwardResult backward(const MlpModel& model, const ForwardCache& cache,
                        const Matrix& grad_output);

/// Row-wise L2 normalization and its vector-Jacobian product.
Matrix l2_normalize_rows(const Matrix& v);
Matrix l2_normalize_rows_backward(const Matrix& v, const Matrix& grad_output);

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  Gradients first_moment;
  Gradients second_moment;

  static AdamState for_model(const MlpModel& model, double lr = 1e-3);
};

inline constexpr double kParameterLimit = 1e8;

/// One bias-corrected Adam update. Throws DivergenceError on non-finite
/// gradients or when a parameter magnitude exceeds kParameterLimit.
void adam_step(MlpModel& model, const Gradients& grads, AdamState& state);

/// initial_lr * decay_factor^floor(epoch / decay_every).
double lr_schedule(double initial_lr, int epoch, int decay_every, double decay_factor);

}  // namespace ahcl::nn
