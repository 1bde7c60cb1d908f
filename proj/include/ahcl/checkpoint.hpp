#pragma once

#include <filesystem>
#include <string>

#include "ahcl/trainer.hpp"

namespace ahcl {

// Binary checkpoint layout (all integers and floats little-endian):
//
//   char[8]  magic "AHCLCKPT"
//   u32      version (1)
//   f64      margin
//   f64      epsilon
//   u8       normalize_embeddings
//   u8       minmax
//   u32      p (input feature count)
//   f64[p]   feature minima   } only when minmax == 1
//   f64[p]   feature maxima   }
//   network  encoder
//   network  decoder
//
// network := u64 seed, u32 layer_count, then per layer:
//   u32 in_dim, u32 out_dim, u8 activation (0 identity, 1 relu, 2 sigmoid),
//   f64[out_dim * in_dim] weights row-major (row = output unit),
//   f64[out_dim] bias

inline constexpr char kCheckpointMagic[8] = {'A', 'H', 'C', 'L', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize_checkpoint(const TrainedModel& model);
TrainedModel deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const TrainedModel& model);
TrainedModel load_checkpoint(const std::filesystem::path& path);

}  // namespace ahcl
