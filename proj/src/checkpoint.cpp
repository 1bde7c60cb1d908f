#include "ahcl/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "ahcl/errors.hpp"

namespace ahcl {

namespace {

class Writer {
 public:
  void bytes(const char* data, std::size_t size) { out_.append(data, size); }
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}
  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw DataError("checkpoint is truncated");
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(in_[pos_++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in_[pos_++])) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in_[pos_++])) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  bool at_end() const { return pos_ == in_.size(); }

 private:
  const std::string& in_;
  std::size_t pos_ = 0;
};

void write_network(Writer& w, const nn::MlpModel& model) {
  w.u64(model.seed);
  w.u32(static_cast<std::uint32_t>(model.layers.size()));
  for (const auto& layer : model.layers) {
    w.u32(static_cast<std::uint32_t>(layer.in_dim()));
    w.u32(static_cast<std::uint32_t>(layer.out_dim()));
    w.u8(static_cast<std::uint8_t>(layer.activation));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) w.f64(layer.weight(r, c));
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) w.f64(layer.bias(r));
  }
}

nn::MlpModel read_network(Reader& r) {
  nn::MlpModel model;
  model.seed = r.u64();
  const std::uint32_t count = r.u32();
  if (count == 0 || count > 1024) throw DataError("checkpoint: implausible layer count");
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t in = r.u32();
    const std::uint32_t out = r.u32();
    const std::uint8_t act = r.u8();
    if (in == 0 || out == 0 || act > 2) throw DataError("checkpoint: malformed layer header");
    r.need(static_cast<std::size_t>(in) * out * 8);
    nn::Layer layer;
    layer.activation = static_cast<nn::Activation>(act);
    layer.weight.resize(out, in);
    for (Eigen::Index row = 0; row < layer.weight.rows(); ++row)
      for (Eigen::Index col = 0; col < layer.weight.cols(); ++col) layer.weight(row, col) = r.f64();
    layer.bias.resize(out);
    for (Eigen::Index row = 0; row < layer.bias.size(); ++row) layer.bias(row) = r.f64();
    model.layers.push_back(std::move(layer));
  }
  try {
    model.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("checkpoint: ") + e.what());
  }
  return model;
}

}  // namespace

std::string serialize_checkpoint(const TrainedModel& model) {
  Writer w;
  w.bytes(kCheckpointMagic, sizeof(kCheckpointMagic));
  w.u32(kCheckpointVersion);
  w.f64(model.margin);
  w.f64(model.epsilon);
  w.u8(model.normalize_embeddings ? 1 : 0);
  w.u8(model.minmax ? 1 : 0);
  const auto p = static_cast<std::uint32_t>(model.encoder.in_dim());
  w.u32(p);
  if (model.minmax) {
    for (Eigen::Index i = 0; i < model.range.min.size(); ++i) w.f64(model.range.min(i));
    for (Eigen::Index i = 0; i < model.range.max.size(); ++i) w.f64(model.range.max(i));
  }
  write_network(w, model.encoder);
  write_network(w, model.decoder);
  return w.take();
}

TrainedModel deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof(kCheckpointMagic) ||
      std::memcmp(bytes.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
    throw DataError("not a checkpoint file (bad magic)");
  }
  Reader r(bytes);
  for (std::size_t i = 0; i < sizeof(kCheckpointMagic); ++i) r.u8();
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  TrainedModel model;
  model.margin = r.f64();
  model.epsilon = r.f64();
  model.normalize_embeddings = r.u8() != 0;
  model.minmax = r.u8() != 0;
  const std::uint32_t p = r.u32();
  if (model.minmax) {
    model.range.min.resize(p);
    model.range.max.resize(p);
    for (std::uint32_t i = 0; i < p; ++i) model.range.min(i) = r.f64();
    for (std::uint32_t i = 0; i < p; ++i) model.range.max(i) = r.f64();
  }
  model.encoder = read_network(r);
  model.decoder = read_network(r);
  if (!r.at_end()) throw DataError("checkpoint has trailing bytes");
  if (static_cast<std::uint32_t>(model.encoder.in_dim()) != p ||
      model.decoder.in_dim() != model.encoder.out_dim() || model.decoder.out_dim() != model.encoder.in_dim()) {
    throw DataError("checkpoint encoder/decoder dimensions are inconsistent");
  }
  if (!(model.margin > 0.0) || !(model.epsilon > 0.0)) throw DataError("checkpoint has invalid margin/epsilon");
  return model;
}

void save_checkpoint(const std::filesystem::path& path, const TrainedModel& model) {
  data::write_file_atomic(path, serialize_checkpoint(model));
}

TrainedModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return deserialize_checkpoint(buffer.str());
}

}  // namespace ahcl
