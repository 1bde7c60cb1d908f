#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "ahcl/errors.hpp"
#include "ahcl/nn.hpp"

using namespace ahcl;
using namespace ahcl::nn;

namespace {

Matrix random_matrix(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

// Independent evaluation: explicit loops, no Eigen products.
Matrix naive_forward(const MlpModel& model, const Matrix& x) {
  Matrix a = x;
  for (const Layer& layer : model.layers) {
    Matrix out(a.rows(), layer.out_dim());
    for (Eigen::Index r = 0; r < a.rows(); ++r)
      for (int o = 0; o < layer.out_dim(); ++o) {
        double s = layer.bias(o);
        for (int i = 0; i < layer.in_dim(); ++i) s += layer.weight(o, i) * a(r, i);
        switch (layer.activation) {
          case Activation::kIdentity: break;
          case Activation::kRelu: s = s > 0 ? s : 0; break;
          case Activation::kSigmoid: s = 1 / (1 + std::exp(-s)); break;
        }
        out(r, o) = s;
      }
    a = out;
  }
  return a;
}

// Loss = sum(output .* probe), so dLoss/dOutput = probe.
double probe_loss(const MlpModel& model, const Matrix& x, const Matrix& probe) {
  return forward(model, x).cwiseProduct(probe).sum();
}

}  // namespace

TEST_SUITE("nn") {

TEST_CASE("identity layer passes input through") {
  MlpModel m = init_model({{3, 3, Activation::kIdentity}}, 1);
  m.layers[0].weight = Matrix::Identity(3, 3);
  m.layers[0].bias.setZero();
  Matrix x(2, 3);
  x << 1, -2, 3, 4, 5, -6;
  CHECK(forward(m, x) == x);
}

TEST_CASE("relu on negative pre-activations is zero") {
  MlpModel m = init_model({{2, 4, Activation::kRelu}}, 1);
  m.layers[0].weight = Matrix::Ones(4, 2);
  m.layers[0].bias = Vector::Constant(4, -10.0);
  CHECK(forward(m, Matrix::Ones(3, 2)).isZero(0));
}

TEST_CASE("forward matches a straight-line reimplementation") {
  std::mt19937_64 rng(2);
  const MlpModel m = init_model({{5, 7, Activation::kRelu}, {7, 4, Activation::kSigmoid}}, 42);
  const Matrix x = random_matrix(rng, 6, 5);
  const Matrix a = forward(m, x);
  CHECK((a - naive_forward(m, x)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(forward(m, x) == a);
  CHECK(forward_cached(m, x).output == a);
  CHECK(a.minCoeff() > 0.0);
  CHECK(a.maxCoeff() < 1.0);
}

TEST_CASE("backward: zero upstream gives zero gradients") {
  std::mt19937_64 rng(3);
  const MlpModel m = init_model({{3, 5, Activation::kRelu}, {5, 2, Activation::kIdentity}}, 7);
  const Matrix x = random_matrix(rng, 4, 3);
  const auto r = backward(m, forward_cached(m, x), Matrix::Zero(4, 2));
  for (std::size_t l = 0; l < 2; ++l) {
    CHECK(r.params.weight[l].isZero(0));
    CHECK(r.params.bias[l].isZero(0));
  }
  CHECK(r.grad_input.isZero(0));
}

TEST_CASE("backward: linear layer with sum loss") {
  std::mt19937_64 rng(4);
  const MlpModel m = init_model({{3, 2, Activation::kIdentity}}, 5);
  const Matrix x = random_matrix(rng, 4, 3);
  const auto r = backward(m, forward_cached(m, x), Matrix::Ones(4, 2));
  // dW[o][i] = sum over samples of x[:, i]; db[o] = n.
  const RowVector colsum = x.colwise().sum();
  for (int o = 0; o < 2; ++o) {
    CHECK((r.params.weight[0].row(o) - colsum).norm() < 1e-14);
    CHECK(r.params.bias[0](o) == 4.0);
  }
}

TEST_CASE("backward matches finite differences") {
  std::mt19937_64 rng(5);
  for (auto act : {Activation::kIdentity, Activation::kRelu, Activation::kSigmoid}) {
    MlpModel m = init_model({{4, 6, act}, {6, 5, Activation::kRelu}, {5, 3, Activation::kSigmoid}}, 11);
    for (auto& layer : m.layers) layer.bias = Vector::Constant(layer.out_dim(), 0.05);
    const Matrix x = random_matrix(rng, 5, 4);
    const Matrix probe = random_matrix(rng, 5, 3);
    const auto r = backward(m, forward_cached(m, x), probe);
    const double h = 1e-5;
    double diff = 0, norm_a = 0, norm_n = 0;
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
      auto check_slot = [&](double& slot, double analytic) {
        const double saved = slot;
        slot = saved + h;
        const double up = probe_loss(m, x, probe);
        slot = saved - h;
        const double down = probe_loss(m, x, probe);
        slot = saved;
        const double numeric = (up - down) / (2 * h);
        diff += (analytic - numeric) * (analytic - numeric);
        norm_a += analytic * analytic;
        norm_n += numeric * numeric;
      };
      for (Eigen::Index i = 0; i < m.layers[l].weight.size(); ++i)
        check_slot(m.layers[l].weight.data()[i], r.params.weight[l].data()[i]);
      for (Eigen::Index i = 0; i < m.layers[l].bias.size(); ++i)
        check_slot(m.layers[l].bias.data()[i], r.params.bias[l].data()[i]);
    }
    CHECK(std::sqrt(diff) / std::max(std::sqrt(norm_a), std::sqrt(norm_n)) < 1e-4);
  }
}

TEST_CASE("row normalization and its backward pass") {
  std::mt19937_64 rng(6);
  Matrix v = random_matrix(rng, 5, 4);
  const Matrix u = l2_normalize_rows(v);
  for (int i = 0; i < 5; ++i) CHECK(u.row(i).norm() == doctest::Approx(1.0).epsilon(1e-15));
  const Matrix probe = random_matrix(rng, 5, 4);
  const Matrix g = l2_normalize_rows_backward(v, probe);
  const double h = 1e-6;
  for (int i = 0; i < 5; ++i)
    for (int c = 0; c < 4; ++c) {
      const double saved = v(i, c);
      v(i, c) = saved + h;
      const double up = l2_normalize_rows(v).cwiseProduct(probe).sum();
      v(i, c) = saved - h;
      const double down = l2_normalize_rows(v).cwiseProduct(probe).sum();
      v(i, c) = saved;
      CHECK(g(i, c) == doctest::Approx((up - down) / (2 * h)).epsilon(1e-6));
    }
}

TEST_CASE("stale cache is rejected") {
  std::mt19937_64 rng(7);
  const MlpModel a = init_model({{3, 2, Activation::kIdentity}}, 1);
  const MlpModel b = init_model({{3, 2, Activation::kIdentity}}, 2);
  const auto cache = forward_cached(a, random_matrix(rng, 2, 3));
  CHECK_THROWS_AS(backward(b, cache, Matrix::Zero(2, 2)), std::invalid_argument);
  CHECK_THROWS_AS(backward(a, cache, Matrix::Zero(3, 2)), std::invalid_argument);
}

TEST_CASE("adam: zero gradients leave parameters unchanged") {
  MlpModel m = init_model({{3, 2, Activation::kIdentity}}, 9);
  const MlpModel before = m;
  AdamState state = AdamState::for_model(m);
  for (int i = 0; i < 5; ++i) adam_step(m, Gradients::zeros_like(m), state);
  CHECK(m.layers[0].weight == before.layers[0].weight);
  CHECK(m.layers[0].bias == before.layers[0].bias);
  CHECK(state.step == 5);
}

TEST_CASE("adam: first step moves by lr against the gradient sign") {
  MlpModel m = init_model({{1, 1, Activation::kIdentity}}, 0);
  m.layers[0].weight(0, 0) = 0.0;
  AdamState state = AdamState::for_model(m, 1e-3);
  Gradients g = Gradients::zeros_like(m);
  g.weight[0](0, 0) = 1.0;
  adam_step(m, g, state);
  CHECK(m.layers[0].weight(0, 0) == doctest::Approx(-1e-3).epsilon(1e-6));
}

TEST_CASE("adam: converges on a quadratic") {
  MlpModel m = init_model({{1, 1, Activation::kIdentity}}, 0);
  double& w = m.layers[0].weight(0, 0);
  w = 0.0;
  AdamState state = AdamState::for_model(m, 0.1);
  for (int i = 0; i < 200; ++i) {
    Gradients g = Gradients::zeros_like(m);
    g.weight[0](0, 0) = 2 * (w - 3);
    adam_step(m, g, state);
  }
  CHECK(std::abs(w - 3) < 0.1);
}

TEST_CASE("adam: divergence guards") {
  MlpModel m = init_model({{1, 1, Activation::kIdentity}}, 0);
  AdamState state = AdamState::for_model(m, 1e-3);
  Gradients g = Gradients::zeros_like(m);
  g.weight[0](0, 0) = NAN;
  CHECK_THROWS_AS(adam_step(m, g, state), DivergenceError);

  m.layers[0].weight(0, 0) = 2e8;
  AdamState fresh = AdamState::for_model(m, 1e-3);
  CHECK_THROWS_AS(adam_step(m, Gradients::zeros_like(m), fresh), DivergenceError);
}

TEST_CASE("init is deterministic and seed dependent") {
  const std::vector<LayerSpec> specs = {{8, 16, Activation::kRelu}, {16, 4, Activation::kIdentity}};
  const MlpModel a = init_model(specs, 123), b = init_model(specs, 123), c = init_model(specs, 124);
  for (std::size_t l = 0; l < 2; ++l) {
    CHECK(a.layers[l].weight == b.layers[l].weight);
    CHECK(a.layers[l].weight != c.layers[l].weight);
    CHECK(a.layers[l].bias.isZero(0));
  }
  CHECK(a.parameter_count() == 8 * 16 + 16 + 16 * 4 + 4);
  CHECK(a.in_dim() == 8);
  CHECK(a.out_dim() == 4);
  CHECK_THROWS_AS(init_model({{3, 4, Activation::kRelu}, {5, 2, Activation::kIdentity}}, 0),
                  std::invalid_argument);
}

TEST_CASE("init variance follows the activation") {
  const MlpModel relu = init_model({{1000, 1000, Activation::kRelu}}, 1);
  const Matrix& w = relu.layers[0].weight;
  const double var = (w.array() - w.mean()).square().mean();
  CHECK(std::abs(var - 2.0 / 1000) / (2.0 / 1000) < 0.2);

  const MlpModel lin = init_model({{400, 600, Activation::kIdentity}}, 1);
  const Matrix& v = lin.layers[0].weight;
  const double var_lin = (v.array() - v.mean()).square().mean();
  CHECK(std::abs(var_lin - 2.0 / 1000) / (2.0 / 1000) < 0.2);
}

TEST_CASE("learning rate schedule") {
  CHECK(lr_schedule(1e-3, 0, 30, 0.5) == 1e-3);
  CHECK(lr_schedule(1e-3, 60, 30, 0.5) == doctest::Approx(2.5e-4).epsilon(1e-15));
  CHECK(lr_schedule(1e-3, 59, 30, 0.5) == doctest::Approx(5e-4).epsilon(1e-15));
  for (int e = 0; e < 300; e += 7) CHECK(lr_schedule(1e-3, e, 10, 1.0) == 1e-3);
  CHECK_THROWS_AS(lr_schedule(1e-3, 0, 0, 0.5), std::invalid_argument);
}

TEST_CASE("activation names round trip") {
  for (auto a : {Activation::kIdentity, Activation::kRelu, Activation::kSigmoid})
    CHECK(activation_from_string(to_string(a)) == a);
  CHECK_THROWS_AS(activation_from_string("tanh"), std::invalid_argument);
}

}
