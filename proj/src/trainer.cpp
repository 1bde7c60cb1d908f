#include "ahcl/trainer.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

#include "ahcl/errors.hpp"

namespace ahcl {

void RunConfig::validate() const {
  if (!(margin > 0.0)) throw UsageError("margin must be > 0");
  if (!(gamma > 0.0)) throw UsageError("gamma must be > 0");
  if (!(lr > 0.0)) throw UsageError("lr must be > 0");
  if (epochs < 0) throw UsageError("epochs must be >= 0");
  if (batch_size < 0 || batches_per_epoch < 0) throw UsageError("batch settings must be >= 0");
  if (embed_dim < 1) throw UsageError("embed_dim must be >= 1");
  for (int h : hidden)
    if (h < 1) throw UsageError("hidden layer widths must be >= 1");
  if (decay_every < 1 || !(decay_factor > 0.0)) throw UsageError("decay settings must be positive");
  if (!(epsilon > 0.0)) throw UsageError("epsilon must be > 0");
  if (tol < 0.0) throw UsageError("tol must be >= 0");
}

int RunConfig::resolved_batch_size(Eigen::Index n) const {
  const auto size = batch_size > 0 ? static_cast<Eigen::Index>(batch_size) : std::min<Eigen::Index>(2000, n);
  if (size > n) {
    throw UsageError("batch size " + std::to_string(size) + " exceeds dataset size " + std::to_string(n));
  }
  return static_cast<int>(size);
}

int RunConfig::resolved_batches_per_epoch(Eigen::Index n) const {
  if (batches_per_epoch > 0) return batches_per_epoch;
  const auto b = static_cast<Eigen::Index>(resolved_batch_size(n));
  return static_cast<int>((n + b - 1) / b);
}

TrainedModel initial_model(const RunConfig& config, const Matrix& x_raw) {
  config.validate();
  const int p = static_cast<int>(x_raw.cols());
  if (p < 1) throw DataError("dataset has no features");

  std::vector<nn::LayerSpec> enc;
  int prev = p;
  for (int h : config.hidden) {
    enc.push_back({prev, h, nn::Activation::kRelu});
    prev = h;
  }
  enc.push_back({prev, config.embed_dim, nn::Activation::kIdentity});

  std::vector<nn::LayerSpec> dec;
  prev = config.embed_dim;
  for (auto it = config.hidden.rbegin(); it != config.hidden.rend(); ++it) {
    dec.push_back({prev, *it, nn::Activation::kRelu});
    prev = *it;
  }
  dec.push_back({prev, p, nn::Activation::kSigmoid});

  TrainedModel model;
  model.encoder = nn::init_model(enc, config.seed);
  model.decoder = nn::init_model(dec, config.seed ^ 0x9e3779b97f4a7c15ULL);
  model.minmax = config.minmax;
  if (config.minmax) model.range = data::feature_range(x_raw);
  model.normalize_embeddings = config.normalize_embeddings;
  model.margin = config.margin;
  model.epsilon = config.epsilon;
  return model;
}

Matrix preprocess(const TrainedModel& model, const Matrix& x_raw) {
  if (x_raw.cols() != model.encoder.in_dim()) {
    throw DataError("dataset has " + std::to_string(x_raw.cols()) + " features, model expects " +
                    std::to_string(model.encoder.in_dim()));
  }
  return model.minmax ? data::apply_range(x_raw, model.range) : x_raw;
}

Matrix encode(const TrainedModel& model, const Matrix& x_raw) {
  const Matrix raw = nn::forward(model.encoder, preprocess(model, x_raw));
  return model.normalize_embeddings ? nn::l2_normalize_rows(raw) : raw;
}

namespace {

struct BatchForward {
  nn::ForwardCache encoder_cache;
  Matrix z;
  nn::ForwardCache decoder_cache;
};

BatchForward run_forward(const TrainedModel& model, const Matrix& x_batch, bool normalize) {
  BatchForward f;
  f.encoder_cache = nn::forward_cached(model.encoder, x_batch);
  f.z = normalize ? nn::l2_normalize_rows(f.encoder_cache.output) : f.encoder_cache.output;
  f.decoder_cache = nn::forward_cached(model.decoder, f.z);
  return f;
}

BatchStep gradients_with_labels(const TrainedModel& model, const Matrix& x_batch,
                                const BatchForward& f, const Matrix* labels,
                                const RunConfig& config) {
  const Margin m(config.margin);
  double ahcl_value = 0.0;
  Matrix grad_z = Matrix::Zero(f.z.rows(), f.z.cols());
  if (config.mode == LossMode::kAhcl) {
    const LossAndGradient c = labels != nullptr
                                  ? ahcl_loss_frozen(f.z, *labels, m, config.scaling)
                                  : ahcl_loss(f.z, m, config.epsilon, config.scaling);
    ahcl_value = c.loss;
    grad_z = c.gradient;
  }
  const LossAndGradient r = mse_loss(x_batch, f.decoder_cache.output);
  const nn::BackwardResult dec = nn::backward(model.decoder, f.decoder_cache, config.gamma * r.gradient);
  grad_z += dec.grad_input;
  const Matrix grad_raw = model.normalize_embeddings
                              ? nn::l2_normalize_rows_backward(f.encoder_cache.output, grad_z)
                              : grad_z;
  nn::BackwardResult enc = nn::backward(model.encoder, f.encoder_cache, grad_raw);

  BatchStep step;
  step.loss = config.mode == LossMode::kAhcl ? total_loss(ahcl_value, r.loss, config.gamma)
                                             : LossReport{0.0, r.loss, config.gamma * r.loss, config.gamma};
  step.encoder_grad = std::move(enc.params);
  step.decoder_grad = dec.params;
  return step;
}

}  // namespace

BatchStep batch_gradients(const TrainedModel& model, const Matrix& x_batch, const RunConfig& config) {
  const BatchForward f = run_forward(model, x_batch, model.normalize_embeddings);
  return gradients_with_labels(model, x_batch, f, nullptr, config);
}

BatchStep batch_gradients_frozen(const TrainedModel& model, const Matrix& x_batch,
                                 const Matrix& labels, const RunConfig& config) {
  const BatchForward f = run_forward(model, x_batch, model.normalize_embeddings);
  return gradients_with_labels(model, x_batch, f, &labels, config);
}

LossReport batch_loss_frozen(const TrainedModel& model, const Matrix& x_batch, const Matrix& labels,
                             const RunConfig& config) {
  const BatchForward f = run_forward(model, x_batch, model.normalize_embeddings);
  const double recon = mse_loss(x_batch, f.decoder_cache.output).loss;
  if (config.mode == LossMode::kMseOnly) return LossReport{0.0, recon, config.gamma * recon, config.gamma};
  const double contrast = ahcl_loss_frozen(f.z, labels, Margin(config.margin), config.scaling).loss;
  return total_loss(contrast, recon, config.gamma);
}

TrainResult train(const Matrix& x_raw, const RunConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (x_raw.rows() < 2) throw DataError("training needs at least two samples");
  if (!x_raw.allFinite()) throw DataError("training data contains non-finite values");

  TrainResult result;
  result.model = initial_model(config, x_raw);
  TrainedModel& model = result.model;
  const Matrix x = preprocess(model, x_raw);
  const Eigen::Index n = x.rows();
  const int batch_size = config.resolved_batch_size(n);
  const int batches = config.resolved_batches_per_epoch(n);

  nn::AdamState enc_state = nn::AdamState::for_model(model.encoder, config.lr);
  nn::AdamState dec_state = nn::AdamState::for_model(model.decoder, config.lr);
  const auto start = std::chrono::steady_clock::now();

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = nn::lr_schedule(config.lr, epoch, config.decay_every, config.decay_factor);
    enc_state.lr = lr;
    dec_state.lr = lr;
    const auto epoch_seed = config.seed * 1000003ULL + static_cast<std::uint64_t>(epoch) + 1;
    const auto plan = data::sample_batches(n, batch_size, batches, epoch_seed);

    EpochRecord record;
    record.epoch = epoch + 1;
    try {
      for (const auto& batch : plan) {
        const Matrix xb = batch_size == n ? x : data::gather_rows(x, batch);
        const BatchStep step = batch_gradients(model, xb, config);
        if (!std::isfinite(step.loss.total)) throw DivergenceError("non-finite loss");
        record.ahcl += step.loss.ahcl;
        record.mse += step.loss.mse;
        record.total += step.loss.total;
        nn::adam_step(model.encoder, step.encoder_grad, enc_state);
        nn::adam_step(model.decoder, step.decoder_grad, dec_state);
      }
    } catch (const DivergenceError& e) {
      throw DivergenceError(std::string("training diverged at epoch ") + std::to_string(epoch + 1) +
                                ": " + e.what(),
                            epoch + 1);
    }
    const double count = static_cast<double>(plan.size());
    record.ahcl /= count;
    record.mse /= count;
    record.total /= count;
    record.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.trace.epochs.push_back(record);
    if (on_epoch) on_epoch(record, model);

    if (config.tol > 0.0 && result.trace.epochs.size() >= 2) {
      const double prev = result.trace.epochs[result.trace.epochs.size() - 2].total;
      if (std::abs(prev - record.total) / std::max(std::abs(prev), 1e-300) < config.tol) break;
    }
  }
  return result;
}

}  // namespace ahcl
