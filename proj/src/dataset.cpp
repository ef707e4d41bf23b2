#include "churngrid/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "churngrid/rng.hpp"

namespace churngrid::data {

void SplitSpec::validate() const {
  if (train_fraction <= 0.0 || val_fraction <= 0.0 || test_fraction <= 0.0) {
    throw std::invalid_argument("split: fractions must be positive");
  }
  if (std::abs(train_fraction + val_fraction + test_fraction - 1.0) > 1e-9) {
    throw std::invalid_argument("split: fractions must sum to 1");
  }
}

SplitResult split(const std::vector<std::string>& ids, const SplitSpec& spec) {
  spec.validate();
  if (ids.size() < 3) throw std::invalid_argument("split: need at least 3 customers");
  std::vector<std::string> pool = ids;
  std::sort(pool.begin(), pool.end());
  if (std::adjacent_find(pool.begin(), pool.end()) != pool.end()) {
    throw std::invalid_argument("split: duplicate customer id");
  }
  Rng rng(spec.seed);
  shuffle(pool, rng);

  const size_t n = pool.size();
  const size_t n_val = static_cast<size_t>(std::floor(spec.val_fraction * static_cast<double>(n)));
  const size_t n_test = static_cast<size_t>(std::floor(spec.test_fraction * static_cast<double>(n)));
  const size_t n_train = n - n_val - n_test;

  SplitResult result;
  result.train.assign(pool.begin(), pool.begin() + n_train);
  result.val.assign(pool.begin() + n_train, pool.begin() + n_train + n_val);
  result.test.assign(pool.begin() + n_train + n_val, pool.end());
  return result;
}

std::vector<enc::EncodedImage> balance_training(const std::vector<enc::EncodedImage>& images,
                                                uint64_t seed) {
  std::vector<size_t> positives;
  std::vector<size_t> negatives;
  for (size_t i = 0; i < images.size(); ++i) {
    (images[i].label == 1 ? positives : negatives).push_back(i);
  }
  if (positives.empty() || negatives.empty()) {
    throw std::invalid_argument("balance: both classes must be present");
  }
  if (positives.size() == negatives.size()) return images;

  std::vector<size_t>& majority = positives.size() > negatives.size() ? positives : negatives;
  const size_t keep = std::min(positives.size(), negatives.size());
  Rng rng(seed);
  shuffle(majority, rng);
  majority.resize(keep);

  std::vector<bool> keep_mask(images.size(), false);
  for (size_t i : positives) keep_mask[i] = true;
  for (size_t i : negatives) keep_mask[i] = true;
  std::vector<enc::EncodedImage> balanced;
  balanced.reserve(2 * keep);
  for (size_t i = 0; i < images.size(); ++i) {
    if (keep_mask[i]) balanced.push_back(images[i]);
  }
  return balanced;
}

MeanImage mean_image(const std::vector<enc::EncodedImage>& images) {
  if (images.empty()) throw std::invalid_argument("mean image: empty set");
  MeanImage mean;
  for (const enc::EncodedImage& image : images) {
    for (size_t i = 0; i < image.pixels.size(); ++i) {
      mean.values[i] += static_cast<double>(image.pixels[i]);
    }
  }
  const double inv = 1.0 / static_cast<double>(images.size());
  for (double& v : mean.values) v *= inv;
  return mean;
}

void normalize_image(const enc::EncodedImage& image, const MeanImage& mean, bool unit_scale,
                     double* out) {
  const double scale = unit_scale ? 1.0 / 255.0 : 1.0;
  for (size_t i = 0; i < image.pixels.size(); ++i) {
    out[i] = (static_cast<double>(image.pixels[i]) - mean.values[i]) * scale;
  }
}

std::vector<std::vector<size_t>> batch_indices(size_t count, size_t batch_size,
                                               uint64_t epoch_seed) {
  if (batch_size < 1) throw std::invalid_argument("batches: batch_size must be >= 1");
  std::vector<size_t> order(count);
  for (size_t i = 0; i < count; ++i) order[i] = i;
  Rng rng(epoch_seed);
  shuffle(order, rng);
  std::vector<std::vector<size_t>> batches;
  for (size_t begin = 0; begin < count; begin += batch_size) {
    const size_t end = std::min(count, begin + batch_size);
    batches.emplace_back(order.begin() + begin, order.begin() + end);
  }
  return batches;
}

}  // namespace churngrid::data
