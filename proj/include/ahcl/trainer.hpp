#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ahcl/contrastive.hpp"
#include "ahcl/data.hpp"
#include "ahcl/nn.hpp"

namespace ahcl {

enum class LossMode {
  kAhcl,    // contrastive loss plus gamma * reconstruction
  kMseOnly  // reconstruction only (autoencoder baseline)
};

struct RunConfig {
  double margin = 0.75;
  double gamma = 0.01;
  double lr = 1e-3;
  int epochs = 150;
  /// 0 selects min(2000, n).
  int batch_size = 0;
  /// 0 selects ceil(n / batch_size).
  int batches_per_epoch = 0;
  int embed_dim = 128;
  std::vector<int> hidden = {256, 128};
  bool normalize_embeddings = true;
  bool minmax = true;
  std::uint64_t seed = 0;
  int decay_every = 1;
  double decay_factor = 0.8;
  double epsilon = kDefaultEpsilon;
  PairScaling scaling = PairScaling::kHalfN;
  LossMode mode = LossMode::kAhcl;
  /// Stop early once the relative change of the epoch loss falls below this;
  /// 0 disables the check.
  double tol = 0.0;

  void validate() const;
  int resolved_batch_size(Eigen::Index n) const;
  int resolved_batches_per_epoch(Eigen::Index n) const;
};

/// Encoder, decoder and the preprocessing needed to embed new inputs.
struct TrainedModel {
  nn::MlpModel encoder;
  nn::MlpModel decoder;
  bool minmax = true;
  data::FeatureRange range;
  bool normalize_embeddings = true;
  double margin = 0.75;
  double epsilon = kDefaultEpsilon;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double ahcl = 0.0;
  double mse = 0.0;
  double total = 0.0;
  double wall_seconds = 0.0;
};

struct TrainTrace {
  std::vector<EpochRecord> epochs;
};

struct TrainResult {
  TrainedModel model;
  TrainTrace trace;
};

/// p -> hidden... -> embed_dim (relu, ..., identity) and the mirrored decoder
/// ending in a sigmoid, both seeded from config.seed.
TrainedModel initial_model(const RunConfig& config, const Matrix& x_raw);

/// Losses and parameter gradients of one batch under the stop-gradient
/// convention: labels are recomputed from the current embeddings and frozen.
struct BatchStep {
  LossReport loss;
  nn::Gradients encoder_grad;
  nn::Gradients decoder_grad;
};
BatchStep batch_gradients(const TrainedModel& model, const Matrix& x_batch, const RunConfig& config);

/// Same as batch_gradients with an explicit label matrix (used for gradient
/// verification, where the labels must stay fixed under perturbation).
BatchStep batch_gradients_frozen(const TrainedModel& model, const Matrix& x_batch,
                                 const Matrix& labels, const RunConfig& config);

/// Loss only, labels fixed.
LossReport batch_loss_frozen(const TrainedModel& model, const Matrix& x_batch, const Matrix& labels,
                             const RunConfig& config);

using EpochCallback = std::function<void(const EpochRecord&, const TrainedModel&)>;

/// Per epoch: sample batches, encode, compute frozen soft labels, contrastive
/// and reconstruction gradients, Adam step on encoder and decoder.
/// Throws DivergenceError carrying the epoch number when the loss diverges.
TrainResult train(const Matrix& x_raw, const RunConfig& config, const EpochCallback& on_epoch = {});

/// Preprocessed inputs as seen by the encoder.
Matrix preprocess(const TrainedModel& model, const Matrix& x_raw);

/// Embeddings (row-normalized when the model says so).
Matrix encode(const TrainedModel& model, const Matrix& x_raw);

}  // namespace ahcl
