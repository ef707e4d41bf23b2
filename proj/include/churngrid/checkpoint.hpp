#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "churngrid/dataset.hpp"
#include "churngrid/model.hpp"

namespace churngrid::nn {

// Everything needed to reproduce predictions bit-for-bit: parameters, the
// training mean image, the input scaling flag, and selection metadata.
struct Checkpoint {
  WiseNet model;
  data::MeanImage mean;
  bool unit_scale = true;
  uint64_t seed = 0;
  uint32_t best_epoch = 0;
  double val_logloss = 0.0;
};

// Canonical architecture string stored in every checkpoint; load refuses
// files whose descriptor differs.
std::string architecture_descriptor();

// Binary format, all integers and doubles little-endian:
//   "WISENET1" | u32 descriptor_len | descriptor | u64 param_count |
//   param_count f64 (layer order) | 3024 f64 mean | u8 unit_scale |
//   u64 seed | u32 best_epoch | f64 val_logloss
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace churngrid::nn
