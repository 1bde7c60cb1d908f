#include "ahcl/nn.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "ahcl/errors.hpp"

namespace ahcl::nn {

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kIdentity: return "identity";
    case Activation::kRelu: return "relu";
    case Activation::kSigmoid: return "sigmoid";
  }
  throw std::invalid_argument("unknown activation");
}

Activation activation_from_string(const std::string& name) {
  if (name == "identity") return Activation::kIdentity;
  if (name == "relu") return Activation::kRelu;
  if (name == "sigmoid") return Activation::kSigmoid;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

int MlpModel::in_dim() const { return layers.empty() ? 0 : layers.front().in_dim(); }
int MlpModel::out_dim() const { return layers.empty() ? 0 : layers.back().out_dim(); }

std::vector<LayerSpec> MlpModel::specs() const {
  std::vector<LayerSpec> out;
  out.reserve(layers.size());
  for (const auto& l : layers) out.push_back({l.in_dim(), l.out_dim(), l.activation});
  return out;
}

std::size_t MlpModel::parameter_count() const {
  std::size_t count = 0;
  for (const auto& l : layers) count += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return count;
}

void MlpModel::validate() const {
  if (layers.empty()) throw std::invalid_argument("MlpModel: no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (l.in_dim() < 1 || l.out_dim() < 1 || l.bias.size() != l.weight.rows()) {
      throw std::invalid_argument("MlpModel: malformed layer " + std::to_string(i));
    }
    if (i > 0 && layers[i - 1].out_dim() != l.in_dim()) {
      throw std::invalid_argument("MlpModel: layer " + std::to_string(i) +
                                  " input does not match previous output");
    }
    if (!l.weight.allFinite() || !l.bias.allFinite()) {
      throw std::invalid_argument("MlpModel: non-finite parameters in layer " +
                                  std::to_string(i));
    }
  }
}

Gradients Gradients::zeros_like(const MlpModel& model) {
  Gradients g;
  for (const auto& l : model.layers) {
    g.weight.push_back(Matrix::Zero(l.weight.rows(), l.weight.cols()));
    g.bias.push_back(Vector::Zero(l.bias.size()));
  }
  return g;
}

bool Gradients::all_finite() const {
  for (const auto& w : weight)
    if (!w.allFinite()) return false;
  for (const auto& b : bias)
    if (!b.allFinite()) return false;
  return true;
}

Gradients& Gradients::operator+=(const Gradients& other) {
  if (other.weight.size() != weight.size()) throw std::invalid_argument("Gradients: size mismatch");
  for (std::size_t i = 0; i < weight.size(); ++i) {
    weight[i] += other.weight[i];
    bias[i] += other.bias[i];
  }
  return *this;
}

MlpModel init_model(const std::vector<LayerSpec>& specs, std::uint64_t seed) {
  if (specs.empty()) throw std::invalid_argument("init_model: no layers");
  MlpModel model;
  model.seed = seed;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto& s = specs[i];
    if (s.in_dim < 1 || s.out_dim < 1) throw std::invalid_argument("init_model: dims must be >= 1");
    if (i > 0 && specs[i - 1].out_dim != s.in_dim) {
      throw std::invalid_argument("init_model: layer dims do not chain");
    }
    const double variance = s.activation == Activation::kRelu
                                ? 2.0 / s.in_dim
                                : 2.0 / (s.in_dim + s.out_dim);
    std::normal_distribution<double> normal(0.0, std::sqrt(variance));
    Layer layer;
    layer.activation = s.activation;
    layer.weight.resize(s.out_dim, s.in_dim);
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) layer.weight(r, c) = normal(rng);
    layer.bias = Vector::Zero(s.out_dim);
    model.layers.push_back(std::move(layer));
  }
  return model;
}

namespace {

Matrix activate(const Matrix& pre, Activation a) {
  switch (a) {
    case Activation::kIdentity: return pre;
    case Activation::kRelu: return pre.cwiseMax(0.0);
    case Activation::kSigmoid: return pre.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  }
  throw std::invalid_argument("unknown activation");
}

// grad wrt pre-activation given grad wrt activation output.
Matrix activation_backward(const Matrix& pre, const Matrix& grad, Activation a) {
  switch (a) {
    case Activation::kIdentity: return grad;
    case Activation::kRelu:
      return grad.cwiseProduct(pre.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
    case Activation::kSigmoid:
      return grad.cwiseProduct(pre.unaryExpr([](double v) {
        const double s = 1.0 / (1.0 + std::exp(-v));
        return s * (1.0 - s);
      }));
  }
  throw std::invalid_argument("unknown activation");
}

void check_input(const MlpModel& model, const Matrix& x) {
  if (model.layers.empty()) throw std::invalid_argument("forward: model has no layers");
  if (x.cols() != model.in_dim()) {
    throw std::invalid_argument("forward: input has " + std::to_string(x.cols()) +
                                " columns, model expects " + std::to_string(model.in_dim()));
  }
}

}  // namespace

ForwardCache forward_cached(const MlpModel& model, const Matrix& x) {
  check_input(model, x);
  ForwardCache cache;
  cache.model = &model;
  Matrix current = x;
  for (const auto& layer : model.layers) {
    Matrix pre = current * layer.weight.transpose();
    pre.rowwise() += layer.bias.transpose();
    Matrix next = activate(pre, layer.activation);
    cache.inputs.push_back(std::move(current));
    cache.pre_activations.push_back(std::move(pre));
    current = std::move(next);
  }
  cache.output = std::move(current);
  return cache;
}

Matrix forward(const MlpModel& model, const Matrix& x) { return forward_cached(model, x).output; }

BackwardResult backward(const MlpModel& model, const ForwardCache& cache,
                        const Matrix& grad_output) {
  if (cache.model != &model || cache.inputs.size() != model.layers.size()) {
    throw std::invalid_argument("backward: cache does not belong to this model");
  }
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    if (cache.inputs[i].cols() != model.layers[i].in_dim() ||
        cache.pre_activations[i].cols() != model.layers[i].out_dim()) {
      throw std::invalid_argument("backward: stale cache (layer shapes changed)");
    }
  }
  if (grad_output.rows() != cache.output.rows() || grad_output.cols() != cache.output.cols()) {
    throw std::invalid_argument("backward: grad_output shape does not match forward output");
  }

  BackwardResult result;
  result.params = Gradients::zeros_like(model);
  Matrix grad = grad_output;
  for (std::size_t idx = model.layers.size(); idx-- > 0;) {
    const Layer& layer = model.layers[idx];
    const Matrix grad_pre = activation_backward(cache.pre_activations[idx], grad, layer.activation);
    result.params.weight[idx] = grad_pre.transpose() * cache.inputs[idx];
    result.params.bias[idx] = grad_pre.colwise().sum().transpose();
    grad = grad_pre * layer.weight;
  }
  result.grad_input = std::move(grad);
  return result;
}

Matrix l2_normalize_rows(const Matrix& v) {
  Matrix out(v.rows(), v.cols());
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    const double norm = v.row(i).norm();
    if (norm > 0.0) {
      out.row(i) = v.row(i) / norm;
    } else {
      out.row(i).setZero();
    }
  }
  return out;
}

Matrix l2_normalize_rows_backward(const Matrix& v, const Matrix& grad_output) {
  Matrix out(v.rows(), v.cols());
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    const double norm = v.row(i).norm();
    if (norm > 0.0) {
      const RowVector u = v.row(i) / norm;
      const double proj = u.dot(grad_output.row(i));
      out.row(i) = (grad_output.row(i) - proj * u) / norm;
    } else {
      out.row(i).setZero();
    }
  }
  return out;
}

AdamState AdamState::for_model(const MlpModel& model, double lr) {
  if (!(lr > 0.0)) throw std::invalid_argument("AdamState: learning rate must be > 0");
  AdamState s;
  s.lr = lr;
  s.first_moment = Gradients::zeros_like(model);
  s.second_moment = Gradients::zeros_like(model);
  return s;
}

namespace {

template <class Param>
void adam_update(Param& param, const Param& grad, Param& m, Param& v, const AdamState& s,
                 double correction1, double correction2) {
  m = s.beta1 * m + (1.0 - s.beta1) * grad;
  v = s.beta2 * v + (1.0 - s.beta2) * grad.cwiseProduct(grad);
  const double step = s.lr / correction1;
  const double root2 = std::sqrt(correction2);
  param.array() -= step * m.array() / (v.array().sqrt() / root2 + s.eps);
}

}  // namespace

void adam_step(MlpModel& model, const Gradients& grads, AdamState& state) {
  if (grads.weight.size() != model.layers.size() || state.first_moment.weight.size() != model.layers.size()) {
    throw std::invalid_argument("adam_step: gradient/state layout does not match model");
  }
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto& l = model.layers[i];
    if (grads.weight[i].rows() != l.weight.rows() || grads.weight[i].cols() != l.weight.cols() ||
        grads.bias[i].size() != l.bias.size()) {
      throw std::invalid_argument("adam_step: gradient shape mismatch at layer " + std::to_string(i));
    }
  }
  if (!grads.all_finite()) throw DivergenceError("adam_step: non-finite gradient");

  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    auto& layer = model.layers[i];
    adam_update(layer.weight, grads.weight[i], state.first_moment.weight[i],
                state.second_moment.weight[i], state, c1, c2);
    adam_update(layer.bias, grads.bias[i], state.first_moment.bias[i],
                state.second_moment.bias[i], state, c1, c2);
    if (layer.weight.cwiseAbs().maxCoeff() > kParameterLimit ||
        layer.bias.cwiseAbs().maxCoeff() > kParameterLimit) {
      throw DivergenceError("adam_step: parameter magnitude exceeded limit in layer " +
                            std::to_string(i));
    }
  }
}

double lr_schedule(double initial_lr, int epoch, int decay_every, double decay_factor) {
  if (!(initial_lr > 0.0) || decay_every < 1 || !(decay_factor > 0.0) || epoch < 0) {
    throw std::invalid_argument("lr_schedule: arguments must be positive");
  }
  return initial_lr * std::pow(decay_factor, static_cast<double>(epoch / decay_every));
}

}  // namespace ahcl::nn
