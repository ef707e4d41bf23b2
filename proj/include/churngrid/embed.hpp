#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "churngrid/checkpoint.hpp"
#include "churngrid/encoder.hpp"

namespace churngrid::embed {

// Exports the FC-1024 post-activation states for a seeded uniform subsample
// of the image set: a tab-separated matrix (one 1024-value row per customer,
// in image-set order) plus a CSV sidecar `customer_id,probability,label`
// carrying the coloring variables. Activations are captured from ordinary
// inference-mode forward passes.
void extract_activations(const nn::Checkpoint& checkpoint,
                         const std::vector<enc::EncodedImage>& images, size_t sample_size,
                         uint64_t seed, const std::filesystem::path& activations_path,
                         const std::filesystem::path& sidecar_path);

// The subsample row selection used above, exposed for tests: sorted original
// indices of a seeded uniform draw without replacement.
std::vector<size_t> subsample_indices(size_t set_size, size_t sample_size, uint64_t seed);

}  // namespace churngrid::embed
