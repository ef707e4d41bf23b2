#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "churngrid/encoder.hpp"

namespace churngrid::data {

struct SplitSpec {
  double train_fraction = 0.65;
  double val_fraction = 0.11;
  double test_fraction = 0.24;
  uint64_t seed = 7;

  void validate() const;  // fractions positive, summing to 1
};

struct SplitResult {
  std::vector<std::string> train;
  std::vector<std::string> val;
  std::vector<std::string> test;
};

// Deterministic partition: ids are sorted, shuffled with the spec seed, then
// cut into val = floor(val_fraction*n), test = floor(test_fraction*n), and
// train = remainder. Requires >= 3 unique ids.
SplitResult split(const std::vector<std::string>& ids, const SplitSpec& spec);

// Undersamples the majority class (seeded, uniform) down to the minority
// count; the minority class and the original relative order are kept.
// Requires both classes present.
std::vector<enc::EncodedImage> balance_training(const std::vector<enc::EncodedImage>& images,
                                                uint64_t seed);

// Per-pixel arithmetic mean over a training set, in image byte order.
struct MeanImage {
  std::array<double, enc::kImageBytes> values{};

  bool operator==(const MeanImage&) const = default;
};

MeanImage mean_image(const std::vector<enc::EncodedImage>& images);

// Network input transform: (pixel - mean), additionally scaled by 1/255 when
// unit_scale is set. Writes kImageBytes values to `out`.
void normalize_image(const enc::EncodedImage& image, const MeanImage& mean, bool unit_scale,
                     double* out);

// Seeded shuffle of [0, count) chopped into batch_size runs; the last run may
// be short. Every index appears exactly once.
std::vector<std::vector<size_t>> batch_indices(size_t count, size_t batch_size,
                                               uint64_t epoch_seed);

}  // namespace churngrid::data
