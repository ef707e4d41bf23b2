#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "churngrid/events.hpp"

namespace churngrid::enc {

inline constexpr int kImageRows = events::kGridRows;       // 3
inline constexpr int kImageCols = events::kWindowSlices;   // 336
inline constexpr int kImageChannels = 3;                   // RGB
inline constexpr int kImagePixels = kImageRows * kImageCols;         // 1008
inline constexpr int kFeatureDim = kImagePixels + 1;                 // 1009
inline constexpr int kImageBytes = kImagePixels * kImageChannels;    // 3024

struct EncoderConfig {
  double alpha = 1.0 / 7.0;           // power-law exponent for call rows
  double call_saturation_s = 7200.0;  // 120 minutes per 2-hour slice
  double topup_saturation = 30.0;     // market's max single coupon value
  double sms_equivalent_seconds = 60.0;
};

// 336x3 RGB image. Pixel layout is [row][col][channel] with
// row 0 = MOC (red), row 1 = MTC (green), row 2 = topups (blue).
struct EncodedImage {
  std::array<uint8_t, kImageBytes> pixels{};
  int label = 0;
  int crop_offset = 0;  // [0,83]
  std::string customer_id;

  uint8_t& at(int row, int col, int channel) {
    return pixels[(row * kImageCols + col) * kImageChannels + channel];
  }
  uint8_t at(int row, int col, int channel) const {
    return pixels[(row * kImageCols + col) * kImageChannels + channel];
  }
};

// Flattened representation: one value per pixel in row-major order plus the
// crop offset as element 1008. The label rides alongside, not inside.
struct FeatureVector {
  std::array<double, kFeatureDim> values{};
  int label = 0;
};

// (min(s, sat)/sat)^alpha; the power law stretches low activity.
double intensity_call(double seconds, const EncoderConfig& config);

// Linear with saturation at the max coupon value.
double intensity_topup(double amount, double topup_saturation);

// Nearest 8-bit level, ties away from zero.
uint8_t quantize(double intensity);

// 2-hour slices from the most recent market-local Monday 00:00 to the
// window start, in [0,83].
int compute_offset(const events::ObservationWindow& window);

// 1 iff the customer has no topups in [start+28d, start+56d).
int label_customer(std::span<const events::TopupRecord> topups,
                   const events::ObservationWindow& window);

// Column of the first Monday-00:00 mark; marks repeat every 84 columns.
int first_mark_column(int crop_offset);
bool is_mark_column(int col, int crop_offset);

// Full pixel encoding: per-row intensities into the row's own channel, then
// the up-to-4 Monday marks overwrite entire columns with white.
EncodedImage encode_image(const events::ActivityGrid& grid,
                          const events::ObservationWindow& window,
                          const EncoderConfig& config);

FeatureVector flatten_image(const EncodedImage& image);

}  // namespace churngrid::enc
