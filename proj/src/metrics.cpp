#include "churngrid/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>

namespace churngrid::metrics {
namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Indices ordered by probability descending, ties by original index
// ascending — the deterministic top-k rule shared by tp5 and lift.
std::vector<size_t> ranked_indices(const ScoredSet& scored) {
  std::vector<size_t> order(scored.n());
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return scored.probs[a] > scored.probs[b];
  });
  return order;
}

size_t count_positives(const ScoredSet& scored) {
  size_t positives = 0;
  for (int label : scored.labels) positives += static_cast<size_t>(label);
  return positives;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& payload,
                       const char* what) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(std::string(what) + ": cannot open " + tmp.string());
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw std::runtime_error(std::string(what) + ": write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

double parse_double_or_throw(const std::string& field, const char* what) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || p != field.data() + field.size()) {
    throw std::runtime_error(std::string(what) + ": bad numeric field '" + field + "'");
  }
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  size_t pos = 0;
  while (true) {
    const size_t comma = line.find(',', pos);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(pos));
      break;
    }
    fields.push_back(line.substr(pos, comma - pos));
    pos = comma + 1;
  }
  return fields;
}

}  // namespace

void ScoredSet::validate() const {
  if (probs.empty() || probs.size() != labels.size()) {
    throw std::invalid_argument("scored set: need equal non-empty prob/label lists");
  }
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument("scored set: probability outside [0,1]");
    }
  }
  for (int label : labels) {
    if (label != 0 && label != 1) throw std::invalid_argument("scored set: label must be 0 or 1");
  }
}

double auc(const ScoredSet& scored) {
  scored.validate();
  const size_t n = scored.n();
  const size_t positives = count_positives(scored);
  const size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) {
    throw std::invalid_argument("auc: both classes must be present");
  }
  // Sort ascending, then walk tie groups. Every (positive, negative) pair
  // contributes 2 units when the positive scores higher and 1 unit on a tie;
  // a single final division keeps the result identical to pairwise counting.
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scored.probs[a] < scored.probs[b]; });
  uint64_t units = 0;
  uint64_t negatives_below = 0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    uint64_t group_pos = 0;
    uint64_t group_neg = 0;
    while (j < n && scored.probs[order[j]] == scored.probs[order[i]]) {
      group_pos += static_cast<uint64_t>(scored.labels[order[j]]);
      group_neg += static_cast<uint64_t>(1 - scored.labels[order[j]]);
      ++j;
    }
    units += group_pos * (2 * negatives_below + group_neg);
    negatives_below += group_neg;
    i = j;
  }
  return static_cast<double>(units) /
         (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
}

double log_loss(const ScoredSet& scored, double clamp_eps) {
  scored.validate();
  double sum = 0.0;
  for (size_t i = 0; i < scored.n(); ++i) {
    const double p = std::clamp(scored.probs[i], clamp_eps, 1.0 - clamp_eps);
    sum += scored.labels[i] == 1 ? -std::log(p) : -std::log(1.0 - p);
  }
  return sum / static_cast<double>(scored.n());
}

double brier(const ScoredSet& scored) {
  scored.validate();
  double sum = 0.0;
  for (size_t i = 0; i < scored.n(); ++i) {
    const double d = scored.probs[i] - static_cast<double>(scored.labels[i]);
    sum += d * d;
  }
  return sum / static_cast<double>(scored.n());
}

double error_rate(const ScoredSet& scored, double cutoff) {
  scored.validate();
  size_t errors = 0;
  for (size_t i = 0; i < scored.n(); ++i) {
    const int predicted = scored.probs[i] >= cutoff ? 1 : 0;
    errors += static_cast<size_t>(predicted != scored.labels[i]);
  }
  return static_cast<double>(errors) / static_cast<double>(scored.n());
}

double tp5(const ScoredSet& scored) {
  scored.validate();
  const size_t n = scored.n();
  if (n < 20) throw std::invalid_argument("tp5: need at least 20 instances");
  const size_t k = std::max<size_t>(1, static_cast<size_t>(0.05 * static_cast<double>(n)));
  const std::vector<size_t> order = ranked_indices(scored);
  size_t hits = 0;
  for (size_t i = 0; i < k; ++i) hits += static_cast<size_t>(scored.labels[order[i]]);
  return static_cast<double>(hits) / static_cast<double>(k);
}

double top_decile_lift(const ScoredSet& scored) {
  scored.validate();
  const size_t n = scored.n();
  if (n < 10) throw std::invalid_argument("lift: need at least 10 instances");
  const size_t positives = count_positives(scored);
  if (positives == 0) throw std::invalid_argument("lift: need at least one positive");
  const size_t k = std::max<size_t>(1, static_cast<size_t>(0.10 * static_cast<double>(n)));
  const std::vector<size_t> order = ranked_indices(scored);
  size_t hits = 0;
  for (size_t i = 0; i < k; ++i) hits += static_cast<size_t>(scored.labels[order[i]]);
  const double top_rate = static_cast<double>(hits) / static_cast<double>(k);
  const double base_rate = static_cast<double>(positives) / static_cast<double>(n);
  return top_rate / base_rate;
}

std::vector<CalibrationBin> calibration_curve(const ScoredSet& scored, int n_bins) {
  scored.validate();
  if (n_bins < 2) throw std::invalid_argument("calibration: need at least 2 bins");
  std::vector<CalibrationBin> bins(static_cast<size_t>(n_bins));
  std::vector<double> prob_sum(static_cast<size_t>(n_bins), 0.0);
  std::vector<size_t> pos_count(static_cast<size_t>(n_bins), 0);
  for (int b = 0; b < n_bins; ++b) {
    bins[b].low = static_cast<double>(b) / n_bins;
    bins[b].high = static_cast<double>(b + 1) / n_bins;
  }
  for (size_t i = 0; i < scored.n(); ++i) {
    int b = static_cast<int>(scored.probs[i] * n_bins);
    if (b >= n_bins) b = n_bins - 1;  // p == 1.0 falls into the closed last bin
    bins[b].count += 1;
    prob_sum[b] += scored.probs[i];
    pos_count[b] += static_cast<size_t>(scored.labels[i]);
  }
  for (int b = 0; b < n_bins; ++b) {
    if (bins[b].count > 0) {
      bins[b].defined = true;
      bins[b].mean_predicted = prob_sum[b] / static_cast<double>(bins[b].count);
      bins[b].observed_rate =
          static_cast<double>(pos_count[b]) / static_cast<double>(bins[b].count);
    }
  }
  return bins;
}

EvalReport evaluate(const ScoredSet& scored) {
  scored.validate();
  EvalReport report;
  report.n = scored.n();
  report.positives = count_positives(scored);
  report.auc = auc(scored);
  report.log_loss = log_loss(scored);
  report.error_rate = error_rate(scored);
  report.tp5 = tp5(scored);
  report.brier = brier(scored);
  report.top_decile_lift = top_decile_lift(scored);
  report.bins = calibration_curve(scored);
  return report;
}

void write_report(const EvalReport& report, const std::filesystem::path& path) {
  std::string payload;
  payload += "n = " + std::to_string(report.n) + "\n";
  payload += "positives = " + std::to_string(report.positives) + "\n";
  payload += "auc = " + fmt(report.auc) + "\n";
  payload += "log_loss = " + fmt(report.log_loss) + "\n";
  payload += "error_rate = " + fmt(report.error_rate) + "\n";
  payload += "tp5 = " + fmt(report.tp5) + "\n";
  payload += "brier = " + fmt(report.brier) + "\n";
  payload += "top_decile_lift = " + fmt(report.top_decile_lift) + "\n";
  payload += "calibration_bins = " + std::to_string(report.bins.size()) + "\n";
  write_text_atomic(path, payload, "report");
}

EvalReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("report: cannot open " + path.string());
  EvalReport report;
  std::string line;
  bool saw_auc = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const size_t eq = line.find(" = ");
    if (eq == std::string::npos) {
      throw std::runtime_error("report: malformed line '" + line + "'");
    }
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 3);
    if (key == "n") {
      report.n = static_cast<size_t>(parse_double_or_throw(value, "report"));
    } else if (key == "positives") {
      report.positives = static_cast<size_t>(parse_double_or_throw(value, "report"));
    } else if (key == "auc") {
      report.auc = parse_double_or_throw(value, "report");
      saw_auc = true;
    } else if (key == "log_loss") {
      report.log_loss = parse_double_or_throw(value, "report");
    } else if (key == "error_rate") {
      report.error_rate = parse_double_or_throw(value, "report");
    } else if (key == "tp5") {
      report.tp5 = parse_double_or_throw(value, "report");
    } else if (key == "brier") {
      report.brier = parse_double_or_throw(value, "report");
    } else if (key == "top_decile_lift") {
      report.top_decile_lift = parse_double_or_throw(value, "report");
    } else if (key == "calibration_bins") {
      // Bin data lives in the calibration CSV; only the count is recorded.
    } else {
      throw std::runtime_error("report: unknown key '" + key + "'");
    }
  }
  if (!saw_auc) throw std::runtime_error("report: missing auc in " + path.string());
  return report;
}

void write_calibration_csv(const std::vector<CalibrationBin>& bins,
                           const std::filesystem::path& path) {
  std::string payload = "bin_low,bin_high,count,mean_predicted,observed_rate\n";
  for (const CalibrationBin& bin : bins) {
    payload += fmt(bin.low) + "," + fmt(bin.high) + "," + std::to_string(bin.count) + ",";
    if (bin.defined) {
      payload += fmt(bin.mean_predicted) + "," + fmt(bin.observed_rate) + "\n";
    } else {
      payload += "nan,nan\n";
    }
  }
  write_text_atomic(path, payload, "calibration");
}

std::vector<CalibrationBin> load_calibration_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("calibration: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("calibration: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "bin_low,bin_high,count,mean_predicted,observed_rate") {
    throw std::runtime_error("calibration: missing or wrong header in " + path.string());
  }
  std::vector<CalibrationBin> bins;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv(line);
    if (fields.size() != 5) throw std::runtime_error("calibration: expected 5 fields");
    CalibrationBin bin;
    bin.low = parse_double_or_throw(fields[0], "calibration");
    bin.high = parse_double_or_throw(fields[1], "calibration");
    bin.count = static_cast<size_t>(parse_double_or_throw(fields[2], "calibration"));
    if (fields[3] == "nan") {
      bin.defined = false;
    } else {
      bin.defined = true;
      bin.mean_predicted = parse_double_or_throw(fields[3], "calibration");
      bin.observed_rate = parse_double_or_throw(fields[4], "calibration");
    }
    bins.push_back(bin);
  }
  return bins;
}

void write_density_csv(const ScoredSet& scored, int n_bins, const std::filesystem::path& path) {
  scored.validate();
  if (n_bins < 2) throw std::invalid_argument("density: need at least 2 bins");
  std::vector<size_t> class0(static_cast<size_t>(n_bins), 0);
  std::vector<size_t> class1(static_cast<size_t>(n_bins), 0);
  for (size_t i = 0; i < scored.n(); ++i) {
    int b = static_cast<int>(scored.probs[i] * n_bins);
    if (b >= n_bins) b = n_bins - 1;
    (scored.labels[i] == 1 ? class1 : class0)[b] += 1;
  }
  std::string payload = "bin_low,bin_high,count_class0,count_class1\n";
  for (int b = 0; b < n_bins; ++b) {
    payload += fmt(static_cast<double>(b) / n_bins) + "," +
               fmt(static_cast<double>(b + 1) / n_bins) + "," + std::to_string(class0[b]) + "," +
               std::to_string(class1[b]) + "\n";
  }
  write_text_atomic(path, payload, "density");
}

}  // namespace churngrid::metrics
