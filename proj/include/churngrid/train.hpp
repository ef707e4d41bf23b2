#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "churngrid/dataset.hpp"
#include "churngrid/encoder.hpp"
#include "churngrid/model.hpp"

namespace churngrid::nn {

struct TrainConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-4;  // applied to conv/FC weights only
  int batch_size = 64;
  int epochs = 15;
  double dropout_rate = 0.5;
  double prelu_init = 0.25;
  uint64_t seed = 42;
  bool unit_scale = true;  // scale inputs by 1/255 after mean subtraction

  void validate() const;  // throws std::invalid_argument
};

// Flat key-value file; missing keys keep their defaults, unknown keys fail.
TrainConfig load_train_config(const std::filesystem::path& path);

// Images normalized into one contiguous row-per-example matrix.
struct NormalizedSet {
  size_t count = 0;
  std::vector<double> data;  // count x kImageBytes
  std::vector<int> labels;

  const double* row(size_t i) const { return data.data() + i * enc::kImageBytes; }
};

NormalizedSet normalize_set(const std::vector<enc::EncodedImage>& images,
                            const data::MeanImage& mean, bool unit_scale);

// CHURNGRID_THREADS override, else hardware concurrency (clamped to [1,16]).
int resolve_threads();

// Inference-mode churn probabilities. Examples are scored into disjoint
// output slots, so the result is identical for any thread count.
std::vector<double> score_set(const WiseNet& model, const NormalizedSet& set, int threads);
std::vector<double> score_images(const WiseNet& model, const data::MeanImage& mean,
                                 bool unit_scale, const std::vector<enc::EncodedImage>& images,
                                 int threads);

struct EpochLog {
  double train_loss = 0.0;  // mean mini-batch loss over the epoch (dropout on)
  double val_logloss = 0.0;  // inference-mode log-loss on the validation set
};

struct TrainResult {
  WiseNet model;  // parameters of the best epoch
  int best_epoch = 0;  // 1-based
  double best_val_logloss = 0.0;
  double best_train_logloss = 0.0;  // best model, inference mode, training set
  std::vector<EpochLog> epochs;
};

// Seeded mini-batch SGD with momentum; val log-loss (dropout off) selects the
// returned parameters, earliest epoch winning ties. Gradient accumulation is
// strictly sequential in batch order, so results do not depend on thread
// count. Throws on empty sets, zero epochs, or non-finite loss.
TrainResult train(const std::vector<enc::EncodedImage>& balanced_train,
                  const std::vector<enc::EncodedImage>& val, const data::MeanImage& mean,
                  const TrainConfig& config, std::ostream* log);

}  // namespace churngrid::nn
