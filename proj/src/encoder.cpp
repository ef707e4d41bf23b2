#include "churngrid/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace churngrid::enc {

double intensity_call(double seconds, const EncoderConfig& config) {
  if (seconds <= 0.0) return 0.0;
  const double clamped = std::min(seconds, config.call_saturation_s);
  return std::pow(clamped / config.call_saturation_s, config.alpha);
}

double intensity_topup(double amount, double topup_saturation) {
  if (amount <= 0.0) return 0.0;
  return std::min(amount, topup_saturation) / topup_saturation;
}

uint8_t quantize(double intensity) {
  const long level = std::lround(intensity * 255.0);
  return static_cast<uint8_t>(std::clamp(level, 0L, 255L));
}

namespace {

// Epoch seconds of a Monday 00:00 (1970-01-05); weeks tile from here.
constexpr int64_t kMondayEpoch = 4 * events::kDaySeconds;
constexpr int64_t kWeekSeconds = 7 * events::kDaySeconds;

}  // namespace

int compute_offset(const events::ObservationWindow& window) {
  if (!window.aligned()) throw std::invalid_argument("window start not slice-aligned");
  const int64_t local = window.start + window.tz_offset;
  int64_t since_monday = (local - kMondayEpoch) % kWeekSeconds;
  if (since_monday < 0) since_monday += kWeekSeconds;
  return static_cast<int>(since_monday / events::kSliceSeconds);
}

int label_customer(std::span<const events::TopupRecord> topups,
                   const events::ObservationWindow& window) {
  const int64_t lo = window.label_start();
  const int64_t hi = window.label_end();
  for (const auto& topup : topups) {
    if (topup.timestamp >= lo && topup.timestamp < hi) return 0;
  }
  return 1;
}

int first_mark_column(int crop_offset) {
  return (events::kSlicesPerWeek - crop_offset) % events::kSlicesPerWeek;
}

bool is_mark_column(int col, int crop_offset) {
  return col % events::kSlicesPerWeek == first_mark_column(crop_offset) % events::kSlicesPerWeek;
}

EncodedImage encode_image(const events::ActivityGrid& grid,
                          const events::ObservationWindow& window,
                          const EncoderConfig& config) {
  EncodedImage image;
  image.crop_offset = compute_offset(window);
  for (int col = 0; col < kImageCols; ++col) {
    image.at(0, col, 0) = quantize(intensity_call(grid.at(events::ActivityRow::kMoc, col), config));
    image.at(1, col, 1) = quantize(intensity_call(grid.at(events::ActivityRow::kMtc, col), config));
    image.at(2, col, 2) =
        quantize(intensity_topup(grid.at(events::ActivityRow::kTopup, col), config.topup_saturation));
  }
  // Monday marks overwrite whole columns, activity data included.
  for (int col = first_mark_column(image.crop_offset); col < kImageCols;
       col += events::kSlicesPerWeek) {
    for (int row = 0; row < kImageRows; ++row) {
      for (int ch = 0; ch < kImageChannels; ++ch) image.at(row, col, ch) = 255;
    }
  }
  return image;
}

FeatureVector flatten_image(const EncodedImage& image) {
  FeatureVector fv;
  fv.label = image.label;
  for (int row = 0; row < kImageRows; ++row) {
    for (int col = 0; col < kImageCols; ++col) {
      const int idx = row * kImageCols + col;
      fv.values[idx] = is_mark_column(col, image.crop_offset)
                           ? 255.0
                           : static_cast<double>(image.at(row, col, row));
    }
  }
  fv.values[kImagePixels] = static_cast<double>(image.crop_offset);
  return fv;
}

}  // namespace churngrid::enc
