#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "CLI11.hpp"
#include "churngrid/baseline.hpp"
#include "churngrid/checkpoint.hpp"
#include "churngrid/config_file.hpp"
#include "churngrid/dataset.hpp"
#include "churngrid/embed.hpp"
#include "churngrid/encoder.hpp"
#include "churngrid/image_store.hpp"
#include "churngrid/ingest.hpp"
#include "churngrid/kernels.hpp"
#include "churngrid/metrics.hpp"
#include "churngrid/png_io.hpp"
#include "churngrid/rng.hpp"
#include "churngrid/synth.hpp"
#include "churngrid/train.hpp"

namespace {

namespace fs = std::filesystem;
using namespace churngrid;

constexpr uint64_t kSplitTag = 0x5117;
constexpr uint64_t kBalanceTag = 0xba1a;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------- generate

int cmd_generate(const std::string& config_path, const std::string& out_dir, bool market2) {
  synth::MarketConfig config = synth::load_market_config(config_path);
  if (market2) config = synth::second_market(config);
  fs::create_directories(out_dir);

  std::cout << "generating market '" << config.market_id << "' (" << config.n_customers
            << " customers, seed " << config.seed << ")\n";
  synth::Population population = synth::generate_population(config);

  std::vector<std::string> ids;
  ids.reserve(population.windows.size());
  for (const auto& window : population.windows) ids.push_back(window.customer_id);
  data::SplitSpec spec;
  spec.seed = derive_seed(config.seed, kSplitTag);
  const data::SplitResult split = data::split(ids, spec);
  std::unordered_map<std::string, ingest::Split> assignment;
  for (const std::string& id : split.train) assignment[id] = ingest::Split::kTrain;
  for (const std::string& id : split.val) assignment[id] = ingest::Split::kVal;
  for (const std::string& id : split.test) assignment[id] = ingest::Split::kTest;
  for (auto& window : population.windows) window.split = assignment.at(window.customer_id);

  {
    std::ofstream out(fs::path(out_dir) / "cdrs.csv", std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("generate: cannot write cdrs.csv");
    ingest::write_cdr_csv(out, population.cdrs);
  }
  {
    std::ofstream out(fs::path(out_dir) / "topups.csv", std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("generate: cannot write topups.csv");
    ingest::write_topup_csv(out, population.topups);
  }
  synth::write_ground_truth(population.truth, fs::path(out_dir) / "ground_truth.csv");

  ingest::DatasetManifest manifest;
  manifest.market_id = config.market_id;
  manifest.tz_offset = config.tz_offset;
  manifest.generator_seed = config.seed;
  manifest.entries = population.windows;
  ingest::write_manifest(manifest, fs::path(out_dir) / "manifest.txt");
  // The resolved config (market-2 perturbations included) rides along so
  // `encode` can pick up the coupon saturation and timezone.
  synth::write_market_config(config, fs::path(out_dir) / "market_config.txt");

  std::cout << "wrote " << population.cdrs.size() << " cdrs, " << population.topups.size()
            << " topups, " << population.windows.size() << " manifest entries to " << out_dir
            << "\n";
  return 0;
}

// ------------------------------------------------------------------ encode

int cmd_encode(const std::string& data_dir, const std::string& manifest_path,
               const std::string& out_dir, int png_sample) {
  const synth::MarketConfig market =
      synth::load_market_config(fs::path(data_dir) / "market_config.txt");
  const ingest::DatasetManifest manifest = ingest::load_manifest(manifest_path);

  enc::EncoderConfig config;
  config.topup_saturation = market.topup_saturation();

  ingest::CdrParseResult cdrs;
  {
    std::ifstream in(fs::path(data_dir) / "cdrs.csv");
    if (!in) throw std::runtime_error("encode: cannot open cdrs.csv under " + data_dir);
    cdrs = ingest::parse_cdr_csv(in);
  }
  ingest::TopupParseResult topups;
  {
    std::ifstream in(fs::path(data_dir) / "topups.csv");
    if (!in) throw std::runtime_error("encode: cannot open topups.csv under " + data_dir);
    topups = ingest::parse_topup_csv(in);
  }
  for (const auto& err : cdrs.errors) {
    std::cerr << "cdrs.csv line " << err.line << ": " << err.reason << "\n";
  }
  for (const auto& err : topups.errors) {
    std::cerr << "topups.csv line " << err.line << ": " << err.reason << "\n";
  }

  // Group once instead of filtering the full stream per customer.
  std::unordered_map<std::string, events::CustomerTimeline> timelines;
  timelines.reserve(manifest.entries.size());
  for (const auto& entry : manifest.entries) timelines[entry.customer_id].customer_id = entry.customer_id;
  for (auto& record : cdrs.records) {
    auto it = timelines.find(record.customer_id);
    if (it != timelines.end()) it->second.cdrs.push_back(std::move(record));
  }
  for (auto& record : topups.records) {
    auto it = timelines.find(record.customer_id);
    if (it != timelines.end()) it->second.topups.push_back(std::move(record));
  }
  for (auto& [id, timeline] : timelines) {
    std::stable_sort(timeline.cdrs.begin(), timeline.cdrs.end(),
                     [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
    std::stable_sort(timeline.topups.begin(), timeline.topups.end(),
                     [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
  }

  fs::create_directories(out_dir);
  std::map<ingest::Split, std::vector<enc::EncodedImage>> by_split;
  int png_written = 0;
  if (png_sample > 0) fs::create_directories(fs::path(out_dir) / "png");
  for (const auto& entry : manifest.entries) {
    const events::ObservationWindow window{entry.window_start, manifest.tz_offset};
    const events::CustomerTimeline& timeline = timelines.at(entry.customer_id);
    const events::ActivityGrid grid =
        events::aggregate(timeline, window, config.sms_equivalent_seconds);
    enc::EncodedImage image = enc::encode_image(grid, window, config);
    image.customer_id = entry.customer_id;
    image.label = enc::label_customer(timeline.topups, window);
    if (image.label != entry.label) {
      throw std::runtime_error("encode: label mismatch for " + entry.customer_id +
                               " (manifest disagrees with event data)");
    }
    if (image.crop_offset != entry.crop_offset) {
      throw std::runtime_error("encode: crop offset mismatch for " + entry.customer_id);
    }
    if (png_written < png_sample) {
      enc::export_png(image, fs::path(out_dir) / "png" / (entry.customer_id + ".png"));
      ++png_written;
    }
    by_split[entry.split].push_back(std::move(image));
  }

  for (const auto& [split, name] : {std::pair{ingest::Split::kTrain, "train"},
                                    std::pair{ingest::Split::kVal, "val"},
                                    std::pair{ingest::Split::kTest, "test"}}) {
    const auto it = by_split.find(split);
    const std::vector<enc::EncodedImage> empty;
    const std::vector<enc::EncodedImage>& images = it == by_split.end() ? empty : it->second;
    enc::write_image_set(images, fs::path(out_dir) / (std::string(name) + ".images"));
    enc::write_flattened_csv(images, fs::path(out_dir) / (std::string(name) + "_flat.csv"));
    std::cout << name << ": " << images.size() << " images\n";
  }
  return 0;
}

// ------------------------------------------------------------------- train

int cmd_train(const std::string& data_dir, const std::string& train_config_path,
              const std::string& out_path) {
  nn::TrainConfig config;
  if (!train_config_path.empty()) config = nn::load_train_config(train_config_path);

  const std::vector<enc::EncodedImage> train_images =
      enc::load_image_set(fs::path(data_dir) / "train.images");
  const std::vector<enc::EncodedImage> val_images =
      enc::load_image_set(fs::path(data_dir) / "val.images");

  const std::vector<enc::EncodedImage> balanced =
      data::balance_training(train_images, derive_seed(config.seed, kBalanceTag));
  const data::MeanImage mean = data::mean_image(balanced);
  std::cout << "training on " << balanced.size() << " balanced images (" << train_images.size()
            << " raw), validating on " << val_images.size() << ", backend "
            << kern::active_backend() << "\n";

  const nn::TrainResult result = nn::train(balanced, val_images, mean, config, &std::cout);
  std::cout << "best epoch " << result.best_epoch << " val_logloss " << result.best_val_logloss
            << "\n";

  nn::Checkpoint checkpoint;
  checkpoint.model = result.model;
  checkpoint.mean = mean;
  checkpoint.unit_scale = config.unit_scale;
  checkpoint.seed = config.seed;
  checkpoint.best_epoch = static_cast<uint32_t>(result.best_epoch);
  checkpoint.val_logloss = result.best_val_logloss;
  nn::save_checkpoint(checkpoint, out_path);

  cfg::ConfigFile log;
  log.set("epochs", std::to_string(result.epochs.size()));
  log.set("best_epoch", std::to_string(result.best_epoch));
  log.set("best_val_logloss", fmt(result.best_val_logloss));
  log.set("best_train_logloss", fmt(result.best_train_logloss));
  for (size_t e = 0; e < result.epochs.size(); ++e) {
    log.set("epoch_" + std::to_string(e + 1) + "_train_loss", fmt(result.epochs[e].train_loss));
    log.set("epoch_" + std::to_string(e + 1) + "_val_logloss", fmt(result.epochs[e].val_logloss));
  }
  cfg::write_config(log, out_path + ".trainlog");
  return 0;
}

// -------------------------------------------------------------------- eval

int cmd_eval(const std::string& checkpoint_path, const std::string& data_dir,
             const std::string& split, const std::string& report_path) {
  const nn::Checkpoint checkpoint = nn::load_checkpoint(checkpoint_path);
  const std::vector<enc::EncodedImage> images =
      enc::load_image_set(fs::path(data_dir) / (split + ".images"));
  if (images.empty()) throw std::runtime_error("eval: split '" + split + "' is empty");

  const std::vector<double> probs = nn::score_images(
      checkpoint.model, checkpoint.mean, checkpoint.unit_scale, images, nn::resolve_threads());
  metrics::ScoredSet scored;
  scored.probs = probs;
  for (const auto& image : images) scored.labels.push_back(image.label);

  const metrics::EvalReport report = metrics::evaluate(scored);
  metrics::write_report(report, report_path);
  metrics::write_calibration_csv(report.bins, report_path + ".calibration.csv");
  metrics::write_density_csv(scored, 20, report_path + ".density.csv");
  std::cout << "split " << split << " n " << report.n << " auc " << report.auc << " log_loss "
            << report.log_loss << "\n";
  return 0;
}

// ---------------------------------------------------------------- baseline

int cmd_baseline(const std::string& csv_path, const std::string& val_csv,
                 const std::string& test_csv, const std::string& report_path, uint64_t seed) {
  const std::vector<enc::FeatureVector> train_rows = enc::load_flattened_csv(csv_path);
  const std::vector<enc::FeatureVector> balanced =
      baseline::balance_features(train_rows, derive_seed(seed, kBalanceTag));

  double chosen_l2 = 1e-3;
  baseline::LinearModel model;
  if (!val_csv.empty()) {
    const std::vector<enc::FeatureVector> val_rows = enc::load_flattened_csv(val_csv);
    double best_loss = 0.0;
    bool first = true;
    for (double l2 : {1e-4, 1e-3, 1e-2, 1e-1}) {
      const baseline::LinearModel candidate = baseline::train_logistic(balanced, l2);
      const double val_loss = baseline::logistic_loss(candidate, val_rows, 0.0);
      std::cout << "l2 " << l2 << " val_logloss " << val_loss << "\n";
      if (first || val_loss < best_loss) {
        best_loss = val_loss;
        chosen_l2 = l2;
        model = candidate;
        first = false;
      }
    }
    std::cout << "selected l2 " << chosen_l2 << "\n";
  } else {
    model = baseline::train_logistic(balanced, chosen_l2);
  }

  std::vector<enc::FeatureVector> eval_rows;
  if (test_csv.empty()) {
    eval_rows = train_rows;
  } else {
    eval_rows = enc::load_flattened_csv(test_csv);
  }

  metrics::ScoredSet scored;
  for (const auto& row : eval_rows) {
    scored.probs.push_back(model.predict(row.values.data()));
    scored.labels.push_back(row.label);
  }
  const metrics::EvalReport report = metrics::evaluate(scored);
  metrics::write_report(report, report_path);
  std::cout << "baseline n " << report.n << " auc " << report.auc << " log_loss "
            << report.log_loss << "\n";
  return 0;
}

// ------------------------------------------------------------------- embed

int cmd_embed(const std::string& checkpoint_path, const std::string& data_dir,
              const std::string& split, int64_t sample, uint64_t seed,
              const std::string& out_dir) {
  const nn::Checkpoint checkpoint = nn::load_checkpoint(checkpoint_path);
  const std::vector<enc::EncodedImage> images =
      enc::load_image_set(fs::path(data_dir) / (split + ".images"));
  const size_t sample_size = sample <= 0 ? images.size() : static_cast<size_t>(sample);
  fs::create_directories(out_dir);
  embed::extract_activations(checkpoint, images, sample_size, seed,
                             fs::path(out_dir) / "activations.tsv",
                             fs::path(out_dir) / "sidecar.csv");
  std::cout << "wrote " << sample_size << " activation rows to " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"churngrid: churn prediction from activity images"};
  app.require_subcommand(1);

  std::string config_path, out_dir, data_dir, manifest_path, checkpoint_path, report_path;
  std::string split = "test";
  std::string train_config_path, csv_path, val_csv, test_csv;
  bool market2 = false;
  int png_sample = 0;
  int64_t sample = 0;
  uint64_t seed = 42;

  CLI::App* generate = app.add_subcommand("generate", "generate a synthetic market");
  generate->add_option("--config", config_path, "market config file")->required();
  generate->add_option("--out", out_dir, "output directory")->required();
  generate->add_flag("--market2", market2, "apply the second-market perturbation first");

  CLI::App* encode = app.add_subcommand("encode", "encode events into image sets");
  encode->add_option("--data", data_dir, "directory with cdrs/topups/market_config")->required();
  encode->add_option("--manifest", manifest_path, "dataset manifest file")->required();
  encode->add_option("--out", out_dir, "output directory")->required();
  encode->add_option("--png-sample", png_sample, "export the first N images as PNGs");

  CLI::App* train = app.add_subcommand("train", "train the network");
  train->add_option("--data", data_dir, "directory with train/val image sets")->required();
  train->add_option("--train-config", train_config_path, "training config file");
  train->add_option("--out", checkpoint_path, "checkpoint output path")->required();

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on a split");
  eval->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  eval->add_option("--data", data_dir, "directory with image sets")->required();
  eval->add_option("--split", split, "train, val, or test")
      ->check(CLI::IsMember({"train", "val", "test"}));
  eval->add_option("--report", report_path, "report output path")->required();

  CLI::App* baseline_cmd = app.add_subcommand("baseline", "logistic baseline on flattened CSVs");
  baseline_cmd->add_option("--csv", csv_path, "training flattened CSV")->required();
  baseline_cmd->add_option("--val-csv", val_csv, "validation CSV for l2 selection");
  baseline_cmd->add_option("--test-csv", test_csv, "CSV to evaluate (default: training CSV)");
  baseline_cmd->add_option("--report", report_path, "report output path")->required();
  baseline_cmd->add_option("--seed", seed, "balancing seed");

  CLI::App* embed_cmd = app.add_subcommand("embed", "export FC-1024 activations");
  embed_cmd->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  embed_cmd->add_option("--data", data_dir, "directory with image sets")->required();
  embed_cmd->add_option("--split", split, "train, val, or test")
      ->check(CLI::IsMember({"train", "val", "test"}));
  embed_cmd->add_option("--sample", sample, "subsample size (0 = full set)");
  embed_cmd->add_option("--seed", seed, "subsample seed");
  embed_cmd->add_option("--out", out_dir, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) return cmd_generate(config_path, out_dir, market2);
    if (encode->parsed()) return cmd_encode(data_dir, manifest_path, out_dir, png_sample);
    if (train->parsed()) return cmd_train(data_dir, train_config_path, checkpoint_path);
    if (eval->parsed()) return cmd_eval(checkpoint_path, data_dir, split, report_path);
    if (baseline_cmd->parsed()) {
      return cmd_baseline(csv_path, val_csv, test_csv, report_path, seed);
    }
    if (embed_cmd->parsed()) {
      return cmd_embed(checkpoint_path, data_dir, split, sample, seed, out_dir);
    }
  } catch (const std::exception& e) {
    std::cerr << "churngrid: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
