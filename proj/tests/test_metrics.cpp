#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <vector>

#include "churngrid/metrics.hpp"
#include "churngrid/rng.hpp"
#include "doctest.h"

using namespace churngrid;
namespace fs = std::filesystem;

namespace {

// Brute-force oracles, written as differently as possible from the library:
// pairwise loops and rank scans instead of sort-and-sweep.

double auc_brute(const metrics::ScoredSet& s) {
  double num = 0.0;
  size_t pos = 0, neg = 0;
  for (size_t i = 0; i < s.n(); ++i) {
    if (s.labels[i] == 1) {
      ++pos;
      for (size_t j = 0; j < s.n(); ++j) {
        if (s.labels[j] == 0) {
          if (s.probs[i] > s.probs[j]) num += 1.0;
          else if (s.probs[i] == s.probs[j]) num += 0.5;
        }
      }
    } else {
      ++neg;
    }
  }
  return num / (static_cast<double>(pos) * static_cast<double>(neg));
}

double log_loss_brute(const metrics::ScoredSet& s) {
  double total = 0.0;
  for (size_t i = 0; i < s.n(); ++i) {
    double p = s.probs[i];
    if (p < 1e-15) p = 1e-15;
    if (p > 1.0 - 1e-15) p = 1.0 - 1e-15;
    total += s.labels[i] == 1 ? -std::log(p) : -std::log(1.0 - p);
  }
  return total / s.n();
}

double brier_brute(const metrics::ScoredSet& s) {
  double total = 0.0;
  for (size_t i = 0; i < s.n(); ++i) {
    total += (s.probs[i] - s.labels[i]) * (s.probs[i] - s.labels[i]);
  }
  return total / s.n();
}

double error_rate_brute(const metrics::ScoredSet& s) {
  size_t wrong = 0;
  for (size_t i = 0; i < s.n(); ++i) {
    wrong += (s.probs[i] >= 0.5 ? 1 : 0) != s.labels[i];
  }
  return static_cast<double>(wrong) / s.n();
}

// Top-k selection by repeated scan instead of sorting.
std::vector<size_t> top_k_brute(const metrics::ScoredSet& s, size_t k) {
  std::vector<bool> taken(s.n(), false);
  std::vector<size_t> picks;
  for (size_t round = 0; round < k; ++round) {
    size_t best = s.n();
    for (size_t i = 0; i < s.n(); ++i) {
      if (taken[i]) continue;
      if (best == s.n() || s.probs[i] > s.probs[best]) best = i;  // ties keep the earlier index
    }
    taken[best] = true;
    picks.push_back(best);
  }
  return picks;
}

double tp5_brute(const metrics::ScoredSet& s) {
  const size_t k = std::max<size_t>(1, static_cast<size_t>(0.05 * static_cast<double>(s.n())));
  size_t hits = 0;
  for (size_t i : top_k_brute(s, k)) hits += s.labels[i];
  return static_cast<double>(hits) / static_cast<double>(k);
}

double lift_brute(const metrics::ScoredSet& s) {
  const size_t k = std::max<size_t>(1, static_cast<size_t>(0.10 * static_cast<double>(s.n())));
  size_t hits = 0, pos = 0;
  for (size_t i : top_k_brute(s, k)) hits += s.labels[i];
  for (int label : s.labels) pos += label;
  return (static_cast<double>(hits) / static_cast<double>(k)) /
         (static_cast<double>(pos) / static_cast<double>(s.n()));
}

metrics::ScoredSet random_set(Rng& rng, size_t n, bool quantized) {
  metrics::ScoredSet s;
  for (size_t i = 0; i < n; ++i) {
    double p = rng.uniform();
    if (quantized) p = std::floor(p * 8.0) / 8.0;  // force heavy ties
    s.probs.push_back(p);
    s.labels.push_back(rng.bernoulli(0.4) ? 1 : 0);
  }
  // Both classes must appear for AUC/lift to be defined.
  s.labels[0] = 1;
  s.labels[n - 1] = 0;
  return s;
}

}  // namespace

TEST_CASE("all metrics agree with brute force on 50 random sets") {
  Rng rng(404);
  for (int round = 0; round < 50; ++round) {
    const size_t n = 20 + rng.uniform_int(181);  // [20, 200]
    const metrics::ScoredSet s = random_set(rng, n, round % 2 == 0);
    INFO("round ", round, " n ", n);
    CHECK(metrics::auc(s) == auc_brute(s));
    CHECK(metrics::tp5(s) == tp5_brute(s));
    CHECK(metrics::top_decile_lift(s) == lift_brute(s));
    CHECK(metrics::error_rate(s) == error_rate_brute(s));
    CHECK(std::abs(metrics::log_loss(s) - log_loss_brute(s)) <= 1e-12);
    CHECK(std::abs(metrics::brier(s) - brier_brute(s)) <= 1e-12);
  }
}

TEST_CASE("auc hits the closed-form values on degenerate rankings") {
  metrics::ScoredSet perfect;
  perfect.probs = {0.9, 0.8, 0.2, 0.1};
  perfect.labels = {1, 1, 0, 0};
  CHECK(metrics::auc(perfect) == 1.0);

  metrics::ScoredSet reversed = perfect;
  std::reverse(reversed.labels.begin(), reversed.labels.end());
  CHECK(metrics::auc(reversed) == 0.0);

  metrics::ScoredSet constant;
  constant.probs = {0.5, 0.5, 0.5, 0.5};
  constant.labels = {1, 0, 1, 0};
  CHECK(metrics::auc(constant) == 0.5);

  metrics::ScoredSet single;
  single.probs = {0.8, 0.6, 0.4};
  single.labels = {1, 1, 1};
  CHECK_THROWS(metrics::auc(single));  // one class only
}

TEST_CASE("auc is invariant under order-preserving transforms") {
  Rng rng(405);
  const metrics::ScoredSet s = random_set(rng, 100, true);
  metrics::ScoredSet squeezed = s;
  for (double& p : squeezed.probs) p = 0.25 + p / 2.0;  // strictly monotone, stays in [0,1]
  CHECK(metrics::auc(squeezed) == metrics::auc(s));
  CHECK(metrics::tp5(squeezed) == metrics::tp5(s));
  CHECK(metrics::top_decile_lift(squeezed) == metrics::top_decile_lift(s));
}

TEST_CASE("label flip mirrors auc around one half") {
  Rng rng(406);
  const metrics::ScoredSet s = random_set(rng, 150, false);
  metrics::ScoredSet flipped = s;
  for (int& label : flipped.labels) label = 1 - label;
  CHECK(metrics::auc(flipped) == doctest::Approx(1.0 - metrics::auc(s)).epsilon(1e-14));
}

TEST_CASE("validation rejects malformed sets and small-n metrics refuse") {
  metrics::ScoredSet bad;
  CHECK_THROWS(bad.validate());
  bad.probs = {0.5};
  bad.labels = {1, 0};
  CHECK_THROWS(bad.validate());
  bad.probs = {1.5, 0.2};
  CHECK_THROWS(bad.validate());
  bad.probs = {0.5, 0.2};
  bad.labels = {2, 0};
  CHECK_THROWS(bad.validate());

  metrics::ScoredSet tiny;
  tiny.probs.assign(19, 0.5);
  tiny.labels.assign(19, 0);
  tiny.labels[0] = 1;
  CHECK_THROWS(metrics::tp5(tiny));  // needs n >= 20
  metrics::ScoredSet nine;
  nine.probs.assign(9, 0.5);
  nine.labels.assign(9, 0);
  nine.labels[0] = 1;
  CHECK_THROWS(metrics::top_decile_lift(nine));  // needs n >= 10
}

TEST_CASE("calibration bins partition the set and average correctly") {
  metrics::ScoredSet s;
  s.probs = {0.05, 0.07, 0.62, 0.68, 1.0};
  s.labels = {0, 1, 1, 1, 1};
  const std::vector<metrics::CalibrationBin> bins = metrics::calibration_curve(s, 10);
  REQUIRE(bins.size() == 10);
  size_t total = 0;
  for (const auto& bin : bins) total += bin.count;
  CHECK(total == s.n());

  CHECK(bins[0].count == 2);
  CHECK(bins[0].defined);
  CHECK(bins[0].mean_predicted == doctest::Approx(0.06).epsilon(1e-12));
  CHECK(bins[0].observed_rate == 0.5);
  CHECK(bins[6].count == 2);
  CHECK(bins[9].count == 1);  // p == 1.0 lands in the closed last bin
  CHECK(bins[9].observed_rate == 1.0);
  CHECK_FALSE(bins[1].defined);
  CHECK_THROWS(metrics::calibration_curve(s, 1));
}

TEST_CASE("report files round-trip") {
  Rng rng(407);
  const metrics::ScoredSet s = random_set(rng, 64, false);
  const metrics::EvalReport report = metrics::evaluate(s);
  CHECK(report.n == 64);
  CHECK(report.bins.size() == 20);

  const fs::path path = fs::temp_directory_path() / "churngrid_report_test.txt";
  metrics::write_report(report, path);
  const metrics::EvalReport back = metrics::load_report(path);
  CHECK(back.n == report.n);
  CHECK(back.positives == report.positives);
  CHECK(back.auc == report.auc);
  CHECK(back.log_loss == report.log_loss);
  CHECK(back.error_rate == report.error_rate);
  CHECK(back.tp5 == report.tp5);
  CHECK(back.brier == report.brier);
  CHECK(back.top_decile_lift == report.top_decile_lift);
  fs::remove(path);
  CHECK_THROWS(metrics::load_report(path));
}

TEST_CASE("calibration csv round-trips including undefined bins") {
  metrics::ScoredSet s;
  s.probs = {0.1, 0.9};
  s.labels = {0, 1};
  const std::vector<metrics::CalibrationBin> bins = metrics::calibration_curve(s, 5);
  const fs::path path = fs::temp_directory_path() / "churngrid_calib_test.csv";
  metrics::write_calibration_csv(bins, path);
  const std::vector<metrics::CalibrationBin> back = metrics::load_calibration_csv(path);
  REQUIRE(back.size() == bins.size());
  for (size_t i = 0; i < bins.size(); ++i) {
    CHECK(back[i].low == bins[i].low);
    CHECK(back[i].high == bins[i].high);
    CHECK(back[i].count == bins[i].count);
    CHECK(back[i].defined == bins[i].defined);
    if (bins[i].defined) {
      CHECK(back[i].mean_predicted == bins[i].mean_predicted);
      CHECK(back[i].observed_rate == bins[i].observed_rate);
    }
  }
  fs::remove(path);
}

TEST_CASE("density csv counts per class") {
  metrics::ScoredSet s;
  s.probs = {0.05, 0.15, 0.95, 1.0};
  s.labels = {0, 0, 1, 1};
  const fs::path path = fs::temp_directory_path() / "churngrid_density_test.csv";
  metrics::write_density_csv(s, 10, path);
  std::ifstream in(path);
  std::string header, line;
  std::getline(in, header);
  CHECK(header == "bin_low,bin_high,count_class0,count_class1");
  int rows = 0;
  size_t total = 0;
  while (std::getline(in, line)) {
    ++rows;
    const size_t a = line.rfind(',');
    const size_t b = line.rfind(',', a - 1);
    total += std::stoul(line.substr(b + 1, a - b - 1)) + std::stoul(line.substr(a + 1));
  }
  CHECK(rows == 10);
  CHECK(total == 4);
  fs::remove(path);
}
