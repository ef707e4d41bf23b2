#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace churngrid::metrics {

struct ScoredSet {
  std::vector<double> probs;  // predicted churn probability in [0,1]
  std::vector<int> labels;    // observed {0,1}

  size_t n() const { return probs.size(); }
  void validate() const;  // equal non-zero lengths, ranges
};

// Mann-Whitney AUC, ties counted 1/2. Counting is done in integers and
// divided once, so the result is bit-identical to naive pairwise counting.
double auc(const ScoredSet& scored);

// Mean negative log-likelihood with probabilities clamped to
// [clamp_eps, 1 - clamp_eps].
double log_loss(const ScoredSet& scored, double clamp_eps = 1e-15);

double brier(const ScoredSet& scored);

// Predict positive iff p >= cutoff.
double error_rate(const ScoredSet& scored, double cutoff = 0.5);

// Precision among the top 5% by predicted probability (k = max(1,
// floor(0.05 n)), ties by original index ascending). Requires n >= 20.
double tp5(const ScoredSet& scored);

// Positive rate among the top 10% divided by the overall positive rate.
// Requires n >= 10 and at least one positive.
double top_decile_lift(const ScoredSet& scored);

struct CalibrationBin {
  double low = 0.0;
  double high = 0.0;
  size_t count = 0;
  // Undefined (and flagged false) for empty bins.
  bool defined = false;
  double mean_predicted = 0.0;
  double observed_rate = 0.0;
};

// Equal-width probability bins, last bin closed at 1.0.
std::vector<CalibrationBin> calibration_curve(const ScoredSet& scored, int n_bins = 20);

struct EvalReport {
  size_t n = 0;
  size_t positives = 0;
  double auc = 0.0;
  double log_loss = 0.0;
  double error_rate = 0.0;
  double tp5 = 0.0;
  double brier = 0.0;
  double top_decile_lift = 0.0;
  std::vector<CalibrationBin> bins;
};

EvalReport evaluate(const ScoredSet& scored);

// Flat key-value text (bins go to the calibration CSV, not the report file).
void write_report(const EvalReport& report, const std::filesystem::path& path);
EvalReport load_report(const std::filesystem::path& path);  // bins left empty

void write_calibration_csv(const std::vector<CalibrationBin>& bins,
                           const std::filesystem::path& path);
std::vector<CalibrationBin> load_calibration_csv(const std::filesystem::path& path);

// Per-class histogram of predicted probabilities over the same equal-width
// bins, for external plotting.
void write_density_csv(const ScoredSet& scored, int n_bins, const std::filesystem::path& path);

}  // namespace churngrid::metrics
