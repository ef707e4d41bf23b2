#pragma once

#include <filesystem>
#include <vector>

#include "churngrid/encoder.hpp"

namespace churngrid::enc {

// Binary image-set container ("CHRNIMG1"). Little-endian fixed-width fields:
//   magic[8] | u32 count | count * (u16 id_len | id bytes | u8 label |
//   u16 crop_offset | 3024 pixel bytes)
void write_image_set(const std::vector<EncodedImage>& images, const std::filesystem::path& path);
std::vector<EncodedImage> load_image_set(const std::filesystem::path& path);

// Flattened feature CSV: header f0,...,f1007,offset,label followed by one row
// per image. Pixel features are the raw quantized bytes; offset is the crop
// offset; both round-trip losslessly through decimal text.
void write_flattened_csv(const std::vector<EncodedImage>& images,
                         const std::filesystem::path& path);
std::vector<FeatureVector> load_flattened_csv(const std::filesystem::path& path);

}  // namespace churngrid::enc
