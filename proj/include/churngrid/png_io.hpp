#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "churngrid/encoder.hpp"

namespace churngrid::enc {

// 8-bit truecolor PNG, width 336, height 3; pixel (x,y) maps to image
// channels at (row y, col x).
void export_png(const EncodedImage& image, const std::filesystem::path& path);

struct PngData {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> rgb;  // row-major, 3 bytes per pixel
};

PngData read_png(const std::filesystem::path& path);

}  // namespace churngrid::enc
