#include "churngrid/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "churngrid/config_file.hpp"
#include "churngrid/kernels.hpp"
#include "churngrid/metrics.hpp"
#include "churngrid/rng.hpp"

namespace churngrid::nn {
namespace {

// Seed-stream tags keeping the independent randomness sources apart.
constexpr uint64_t kInitTag = 0x17;
constexpr uint64_t kEpochTag = 0xba7c;
constexpr uint64_t kDropoutTag = 0xdd;

double val_logloss_of(const std::vector<double>& probs, const std::vector<int>& labels) {
  metrics::ScoredSet scored{probs, labels};
  return metrics::log_loss(scored);
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("train config: learning_rate must be > 0");
  if (momentum < 0.0 || momentum >= 1.0) {
    throw std::invalid_argument("train config: momentum must be in [0,1)");
  }
  if (weight_decay < 0.0) throw std::invalid_argument("train config: weight_decay must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be >= 1");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
    throw std::invalid_argument("train config: dropout_rate must be in [0,1)");
  }
  if (!(prelu_init > 0.0)) throw std::invalid_argument("train config: prelu_init must be > 0");
  if (epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  const cfg::ConfigFile file = cfg::load_config(path);
  TrainConfig config;
  if (file.has("learning_rate")) config.learning_rate = cfg::to_double("learning_rate", file.get("learning_rate"));
  if (file.has("momentum")) config.momentum = cfg::to_double("momentum", file.get("momentum"));
  if (file.has("weight_decay")) config.weight_decay = cfg::to_double("weight_decay", file.get("weight_decay"));
  if (file.has("batch_size")) config.batch_size = static_cast<int>(cfg::to_i64("batch_size", file.get("batch_size")));
  if (file.has("epochs")) config.epochs = static_cast<int>(cfg::to_i64("epochs", file.get("epochs")));
  if (file.has("dropout_rate")) config.dropout_rate = cfg::to_double("dropout_rate", file.get("dropout_rate"));
  if (file.has("prelu_init")) config.prelu_init = cfg::to_double("prelu_init", file.get("prelu_init"));
  if (file.has("seed")) config.seed = cfg::to_u64("seed", file.get("seed"));
  if (file.has("unit_scale")) config.unit_scale = cfg::to_i64("unit_scale", file.get("unit_scale")) != 0;
  const std::vector<std::string> unread = file.unread_keys();
  if (!unread.empty()) {
    throw std::runtime_error("config: unknown key '" + unread.front() + "' in " + path.string());
  }
  config.validate();
  return config;
}

NormalizedSet normalize_set(const std::vector<enc::EncodedImage>& images,
                            const data::MeanImage& mean, bool unit_scale) {
  NormalizedSet set;
  set.count = images.size();
  set.data.resize(set.count * enc::kImageBytes);
  set.labels.reserve(set.count);
  for (size_t i = 0; i < images.size(); ++i) {
    data::normalize_image(images[i], mean, unit_scale, set.data.data() + i * enc::kImageBytes);
    set.labels.push_back(images[i].label);
  }
  return set;
}

int resolve_threads() {
  if (const char* env = std::getenv("CHURNGRID_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::clamp(hw, 1u, 16u));
}

std::vector<double> score_set(const WiseNet& model, const NormalizedSet& set, int threads) {
  std::vector<double> probs(set.count, 0.0);
  const ForwardOptions options;  // inference mode
  auto score_range = [&](size_t begin, size_t end) {
    Workspace ws;
    for (size_t i = begin; i < end; ++i) {
      probs[i] = forward(model, set.row(i), ws, options).churn_probability;
    }
  };
  const size_t n = set.count;
  const size_t workers = std::min<size_t>(std::max(threads, 1), std::max<size_t>(n, 1));
  if (workers <= 1) {
    score_range(0, n);
    return probs;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const size_t chunk = (n + workers - 1) / workers;
  for (size_t w = 0; w < workers; ++w) {
    const size_t begin = w * chunk;
    const size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back(score_range, begin, end);
  }
  for (std::thread& t : pool) t.join();
  return probs;
}

std::vector<double> score_images(const WiseNet& model, const data::MeanImage& mean,
                                 bool unit_scale, const std::vector<enc::EncodedImage>& images,
                                 int threads) {
  return score_set(model, normalize_set(images, mean, unit_scale), threads);
}

TrainResult train(const std::vector<enc::EncodedImage>& balanced_train,
                  const std::vector<enc::EncodedImage>& val, const data::MeanImage& mean,
                  const TrainConfig& config, std::ostream* log) {
  config.validate();
  if (balanced_train.empty() || val.empty()) {
    throw std::invalid_argument("train: training and validation sets must be non-empty");
  }

  const NormalizedSet train_set = normalize_set(balanced_train, mean, config.unit_scale);
  const NormalizedSet val_set = normalize_set(val, mean, config.unit_scale);
  const int threads = resolve_threads();

  WiseNet model;
  Rng init_rng(derive_seed(config.seed, kInitTag));
  model.init(init_rng, config.prelu_init);

  WiseNet velocity;  // reused as momentum storage; zero everything, slopes included
  for (WiseNet::ParamView& view : velocity.param_views()) {
    std::fill(view.data, view.data + view.size, 0.0);
  }
  Workspace ws;
  Gradients grads;

  TrainResult result;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const std::vector<std::vector<size_t>> batches = data::batch_indices(
        train_set.count, static_cast<size_t>(config.batch_size),
        derive_seed(config.seed, kEpochTag, static_cast<uint64_t>(epoch)));
    double loss_sum = 0.0;
    size_t loss_count = 0;
    for (const std::vector<size_t>& batch : batches) {
      grads.zero();
      for (size_t idx : batch) {
        Rng dropout_rng(
            derive_seed(config.seed, kDropoutTag, static_cast<uint64_t>(epoch), idx));
        ForwardOptions options;
        options.train = true;
        options.dropout_rate = config.dropout_rate;
        options.dropout_rng = &dropout_rng;
        const double loss = forward_backward(model, train_set.row(idx), train_set.labels[idx],
                                             ws, grads, options);
        if (!std::isfinite(loss)) {
          throw std::runtime_error("train: loss diverged (non-finite) at epoch " +
                                   std::to_string(epoch));
        }
        loss_sum += loss;
        ++loss_count;
      }
      const double inv_batch = 1.0 / static_cast<double>(batch.size());
      std::vector<WiseNet::ParamView> param_views = model.param_views();
      std::vector<WiseNet::ParamView> grad_views = grads.store.param_views();
      std::vector<WiseNet::ParamView> vel_views = velocity.param_views();
      for (size_t v = 0; v < param_views.size(); ++v) {
        double* g = grad_views[v].data;
        for (size_t i = 0; i < grad_views[v].size; ++i) g[i] *= inv_batch;
        kern::sgd_update(param_views[v].data, vel_views[v].data, g, param_views[v].size,
                         config.learning_rate, config.momentum,
                         param_views[v].weight_decay ? config.weight_decay : 0.0);
      }
    }

    const std::vector<double> val_probs = score_set(model, val_set, threads);
    for (double p : val_probs) {
      // Exploded parameters show up as non-finite probabilities; report that
      // as divergence rather than letting the metrics validator reject them.
      if (!std::isfinite(p)) {
        throw std::runtime_error("train: validation loss diverged at epoch " +
                                 std::to_string(epoch));
      }
    }
    EpochLog entry;
    entry.train_loss = loss_sum / static_cast<double>(loss_count);
    entry.val_logloss = val_logloss_of(val_probs, val_set.labels);
    if (!std::isfinite(entry.val_logloss)) {
      throw std::runtime_error("train: validation loss diverged at epoch " +
                               std::to_string(epoch));
    }
    result.epochs.push_back(entry);
    if (log) {
      *log << "epoch " << epoch << "/" << config.epochs << " train_loss "
           << entry.train_loss << " val_logloss " << entry.val_logloss << "\n";
    }
    if (result.best_epoch == 0 || entry.val_logloss < result.best_val_logloss) {
      result.best_epoch = epoch;
      result.best_val_logloss = entry.val_logloss;
      result.model = model;
    }
  }

  const std::vector<double> train_probs = score_set(result.model, train_set, threads);
  result.best_train_logloss = val_logloss_of(train_probs, train_set.labels);
  return result;
}

}  // namespace churngrid::nn
