#include "ahcl/selftest.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "ahcl/contrastive.hpp"
#include "ahcl/eval.hpp"
#include "ahcl/graph.hpp"
#include "ahcl/homotopy.hpp"
#include "ahcl/trainer.hpp"

namespace ahcl::selftest {

namespace {

// Flattened view over every parameter of encoder then decoder.
std::vector<double*> parameter_slots(TrainedModel& model) {
  std::vector<double*> slots;
  for (nn::MlpModel* net : {&model.encoder, &model.decoder}) {
    for (auto& layer : net->layers) {
      for (Eigen::Index i = 0; i < layer.weight.size(); ++i) slots.push_back(layer.weight.data() + i);
      for (Eigen::Index i = 0; i < layer.bias.size(); ++i) slots.push_back(layer.bias.data() + i);
    }
  }
  return slots;
}

std::vector<double> flatten(const nn::Gradients& enc, const nn::Gradients& dec) {
  std::vector<double> out;
  for (const nn::Gradients* g : {&enc, &dec}) {
    for (std::size_t l = 0; l < g->weight.size(); ++l) {
      out.insert(out.end(), g->weight[l].data(), g->weight[l].data() + g->weight[l].size());
      out.insert(out.end(), g->bias[l].data(), g->bias[l].data() + g->bias[l].size());
    }
  }
  return out;
}

CheckResult timed(const std::string& name, const std::function<std::pair<bool, std::string>()>& body) {
  const auto start = std::chrono::steady_clock::now();
  CheckResult r;
  r.name = name;
  try {
    auto [ok, detail] = body();
    r.passed = ok;
    r.detail = std::move(detail);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << std::scientific << v;
  return s.str();
}

}  // namespace

double network_gradient_error(std::uint64_t seed, bool perturb) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> n_pick(2, 8), dim_pick(2, 16);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n = n_pick(rng);
  const int p = dim_pick(rng);

  RunConfig config;
  config.hidden = {dim_pick(rng)};
  config.embed_dim = dim_pick(rng);
  config.seed = rng();
  config.margin = 0.75;
  config.gamma = 0.5;  // larger than the default so both terms are exercised

  Matrix x(n, p);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = unit(rng);
  config.minmax = false;
  TrainedModel model = initial_model(config, x);
  // Nonzero biases so relu kinks are not hit exactly at zero inputs.
  for (nn::MlpModel* net : {&model.encoder, &model.decoder})
    for (auto& layer : net->layers)
      for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = 0.1 * (unit(rng) - 0.5);

  const Matrix labels = soft_labels(encode(model, x), Margin(config.margin), config.epsilon);
  const BatchStep analytic = batch_gradients_frozen(model, x, labels, config);
  std::vector<double> a = flatten(analytic.encoder_grad, analytic.decoder_grad);
  if (perturb) {
    for (double& v : a) v += 1e-3 * (std::abs(v) + 1e-3);
  }

  const double h = 1e-5;
  auto slots = parameter_slots(model);
  std::vector<double> numeric(slots.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const double saved = *slots[i];
    *slots[i] = saved + h;
    const double up = batch_loss_frozen(model, x, labels, config).total;
    *slots[i] = saved - h;
    const double down = batch_loss_frozen(model, x, labels, config).total;
    *slots[i] = saved;
    numeric[i] = (up - down) / (2.0 * h);
  }
  double diff = 0.0, na = 0.0, nn_ = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - numeric[i]) * (a[i] - numeric[i]);
    na += a[i] * a[i];
    nn_ += numeric[i] * numeric[i];
  }
  const double scale = std::max({std::sqrt(na), std::sqrt(nn_), 1e-12});
  return std::sqrt(diff) / scale;
}

std::vector<CheckResult> run_all(const Options& options) {
  std::vector<CheckResult> results;

  results.push_back(timed("adaptive-weight-argmin", [&] {
    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> cost(0.01, 10.0);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
      const HomotopyPair pair(cost(rng), cost(rng));
      double best_y = 0.0, best_v = std::numeric_limits<double>::infinity();
      for (int i = 1; i <= 999; ++i) {
        const double y = i * 1e-3;
        const double v = maclaurin_dual_objective(y, pair);
        if (v < best_v) {
          best_v = v;
          best_y = y;
        }
      }
      worst = std::max(worst, std::abs(best_y - adaptive_weight(pair).value()));
    }
    return std::pair{worst <= 1e-3, "max |grid argmin - g/(f+g)| = " + fmt(worst)};
  }));

  results.push_back(timed("network-gradient-finite-difference", [&] {
    double worst = 0.0;
    for (int i = 0; i < 5; ++i) {
      worst = std::max(worst, network_gradient_error(options.seed + static_cast<std::uint64_t>(i),
                                                     options.perturb_gradient));
    }
    return std::pair{worst < 1e-4, "max relative error = " + fmt(worst)};
  }));

  results.push_back(timed("hungarian-vs-brute-force", [&] {
    std::mt19937_64 rng(options.seed + 1);
    std::uniform_real_distribution<double> cost(-5.0, 5.0);
    int mismatches = 0;
    for (int trial = 0; trial < 100; ++trial) {
      const int k = 1 + static_cast<int>(rng() % 6);
      Matrix c(k, k);
      for (Eigen::Index i = 0; i < c.size(); ++i) c.data()[i] = cost(rng);
      std::vector<int> perm(static_cast<std::size_t>(k));
      std::iota(perm.begin(), perm.end(), 0);
      double best = std::numeric_limits<double>::infinity();
      do {
        double total = 0.0;
        for (int r = 0; r < k; ++r) total += c(r, perm[static_cast<std::size_t>(r)]);
        best = std::min(best, total);
      } while (std::next_permutation(perm.begin(), perm.end()));
      const auto assignment = eval::hungarian(c);
      double got = 0.0;
      for (int r = 0; r < k; ++r) got += c(r, assignment[static_cast<std::size_t>(r)]);
      if (std::abs(got - best) > 1e-9) ++mismatches;
    }
    return std::pair{mismatches == 0, std::to_string(mismatches) + " mismatches in 100 cases"};
  }));

  results.push_back(timed("maclaurin-convergence", [&] {
    const double err = std::abs(maclaurin_partial_sum(0.5, 200) - std::log(0.5));
    // Strictly decreasing while the next term is representable against the
    // running sum, never increasing afterwards.
    bool monotone = true;
    for (int n = 1; n < 200; ++n) {
      const double s = maclaurin_partial_sum(0.5, n), next = maclaurin_partial_sum(0.5, n + 1);
      const bool visible = std::pow(0.5, n + 1) / (n + 1) > std::abs(s) * std::numeric_limits<double>::epsilon();
      if (visible ? !(next < s) : next > s) monotone = false;
    }
    return std::pair{err < 1e-9 && monotone,
                     "|S_200 - ln 0.5| = " + fmt(err) + (monotone ? ", decreasing" : ", NOT decreasing")};
  }));

  results.push_back(timed("laplacian-eigenvalue-bounds", [&] {
    std::mt19937_64 rng(options.seed + 2);
    std::normal_distribution<double> normal(0.0, 0.4);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int trial = 0; trial < 10; ++trial) {
      Matrix z(30, 3);
      for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = normal(rng);
      const auto g = graph::affinity_from_embeddings(z, Margin(0.75));
      const auto eig = graph::symmetric_eigen(graph::normalized_laplacian(g));
      lo = std::min(lo, eig.values.minCoeff());
      hi = std::max(hi, eig.values.maxCoeff());
    }
    const bool ok = lo >= -1e-8 && hi <= 2.0 + 1e-8 && std::abs(lo) < 1e-8;
    return std::pair{ok, "eigenvalues in [" + fmt(lo) + ", " + fmt(hi) + "]"};
  }));

  return results;
}

}  // namespace ahcl::selftest
