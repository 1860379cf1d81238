#pragma once

#include <string>

#include "orbitpose/model.hpp"

namespace orbitpose {

// Model checkpoint, binary, little-endian throughout:
//   magic "OPOSE1"
//   u32 image_size, channels, d_id, hidden count, hidden sizes..., group order
//   f64 c
//   per tensor (enc0.W, enc0.b, ..., decN.W, decN.b):
//     u32 ndims, u32 dims..., f64 data row-major
void save_checkpoint(const std::string& path, const ModelConfig& cfg,
                     const ModelParams& params);

struct Checkpoint {
  ModelConfig config;
  ModelParams params;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace orbitpose
