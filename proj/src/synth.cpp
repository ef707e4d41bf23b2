#include "churngrid/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "churngrid/config_file.hpp"
#include "churngrid/encoder.hpp"
#include "churngrid/rng.hpp"

namespace churngrid::synth {
namespace {

using events::kDaySeconds;
using events::kSliceSeconds;
using events::kSlicesPerDay;

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("market config: ") + what);
}

std::string customer_name(const MarketConfig& config, int64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "-c%06lld", static_cast<long long>(index));
  return config.market_id + buf;
}

// Everything one customer contributes, generated from its own sub-seed so
// customers can be produced in any order.
struct CustomerStream {
  std::vector<events::CdrRecord> cdrs;
  std::vector<events::TopupRecord> topups;
  GroundTruthEntry truth;
  ingest::ManifestEntry window;
};

CustomerStream generate_customer(const MarketConfig& config, int64_t index) {
  Rng rng(derive_seed(config.seed, 1000, static_cast<uint64_t>(index)));
  CustomerStream out;
  const std::string id = customer_name(config, index);
  const int64_t t0 = config.start_time();
  const int64_t horizon_end = config.horizon_end();

  const bool churner = rng.uniform() < config.churn_fraction;
  const double calls_per_day = rng.lognormal_mean(config.base_calls_per_day, config.rate_sigma);

  // Observation windows must leave room for the 28-day label window, so both
  // the churn decision and the random window start live on slice boundaries
  // in [28d, horizon - 28d] counted from t0 (inclusive at both ends).
  const int64_t n_choices = (config.horizon_days - 56) * kSlicesPerDay + 1;
  int64_t decision_time = 0;
  int64_t window_start = 0;
  if (churner) {
    decision_time = t0 + 28 * kDaySeconds +
                    static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>(n_choices))) *
                        kSliceSeconds;
    window_start = decision_time - events::kWindowSeconds;
  } else {
    window_start = t0 + static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>(n_choices))) *
                            kSliceSeconds;
  }

  // Calls: per-slice Poisson counts. The diurnal profile is normalized so the
  // expected total per day equals calls_per_day, and the weekday/weekend
  // factors are normalized so the weekly mean is unchanged.
  const double diurnal_sum =
      std::accumulate(config.diurnal_profile.begin(), config.diurnal_profile.end(), 0.0);
  const double week_norm = 7.0 / (5.0 + 2.0 * config.weekend_multiplier);
  const int64_t horizon_slices = config.horizon_days * kSlicesPerDay;
  for (int64_t s = 0; s < horizon_slices; ++s) {
    const int64_t slice_start = t0 + s * kSliceSeconds;
    const int64_t day = s / kSlicesPerDay;  // local day index; day 0 is a Monday
    const int day_slice = static_cast<int>(s % kSlicesPerDay);
    const int dow = static_cast<int>(day % 7);
    const double day_factor = (dow < 5 ? 1.0 : config.weekend_multiplier) * week_norm;
    double lambda =
        calls_per_day * (config.diurnal_profile[day_slice] / diurnal_sum) * day_factor;
    if (churner) lambda *= decay_multiplier(config, decision_time, slice_start);
    const int64_t count = rng.poisson(lambda);
    for (int64_t k = 0; k < count; ++k) {
      events::CdrRecord cdr;
      cdr.customer_id = id;
      cdr.timestamp = slice_start + static_cast<int64_t>(rng.uniform_int(kSliceSeconds));
      cdr.direction = rng.bernoulli(0.5) ? events::Direction::kMoc : events::Direction::kMtc;
      if (rng.uniform() < config.sms_fraction) {
        cdr.service = events::Service::kSms;
        cdr.duration_s = 0;
      } else {
        cdr.service = events::Service::kVoice;
        cdr.duration_s =
            std::max<int64_t>(1, std::llround(rng.exponential(config.mean_call_duration_s)));
      }
      cdr.cell_id = "cell" + std::to_string(rng.uniform_int(40));
      cdr.counterpart = "p" + std::to_string(rng.uniform_int(100000));
      out.cdrs.push_back(std::move(cdr));
    }
  }

  // Top-ups: renewal process with exponential gaps; a churner's stream stops
  // at the decision time and never resumes.
  const double cadence_s = config.topup_cadence_days * static_cast<double>(kDaySeconds);
  int64_t t = t0 + std::max<int64_t>(1, std::llround(rng.exponential(cadence_s)));
  while (t < horizon_end) {
    if (churner && t >= decision_time) break;
    events::TopupRecord topup;
    topup.customer_id = id;
    topup.timestamp = t;
    topup.amount = config.topup_coupons[rng.uniform_int(config.topup_coupons.size())];
    out.topups.push_back(std::move(topup));
    t += std::max<int64_t>(1, std::llround(rng.exponential(cadence_s)));
  }

  out.truth = GroundTruthEntry{id, churner, churner ? decision_time : 0};

  const events::ObservationWindow window{window_start, config.tz_offset};
  out.window.customer_id = id;
  out.window.window_start = window_start;
  out.window.split = ingest::Split::kTrain;  // assigned for real by dataset::split
  out.window.label = enc::label_customer(out.topups, window);
  out.window.crop_offset = enc::compute_offset(window);
  return out;
}

}  // namespace

double MarketConfig::topup_saturation() const {
  return *std::max_element(topup_coupons.begin(), topup_coupons.end());
}

int64_t MarketConfig::start_time() const { return kBaseMondayUtc - tz_offset; }

int64_t MarketConfig::horizon_end() const { return start_time() + horizon_days * kDaySeconds; }

void MarketConfig::validate() const {
  require(!market_id.empty(), "market_id must be non-empty");
  require(n_customers >= 1, "n_customers must be >= 1");
  require(horizon_days >= 56, "horizon_days must be >= 56");
  require(std::llabs(tz_offset) <= 14 * 3600, "tz_offset must be within +/-14 hours");
  require(base_calls_per_day > 0.0, "base_calls_per_day must be > 0");
  require(rate_sigma >= 0.0, "rate_sigma must be >= 0");
  double diurnal_sum = 0.0;
  for (double w : diurnal_profile) {
    require(w >= 0.0, "diurnal_profile weights must be >= 0");
    diurnal_sum += w;
  }
  require(diurnal_sum > 0.0, "diurnal_profile must have positive total weight");
  require(weekend_multiplier > 0.0, "weekend_multiplier must be > 0");
  require(mean_call_duration_s > 0.0, "mean_call_duration_s must be > 0");
  require(sms_fraction >= 0.0 && sms_fraction <= 1.0, "sms_fraction must be in [0,1]");
  require(topup_cadence_days > 0.0, "topup_cadence_days must be > 0");
  require(!topup_coupons.empty(), "topup_coupons must be non-empty");
  for (double c : topup_coupons) require(c > 0.0, "topup coupons must be > 0");
  require(churn_fraction > 0.0 && churn_fraction < 1.0, "churn_fraction must be in (0,1)");
  require(!decay_profile.empty(), "decay_profile must be non-empty");
  for (double d : decay_profile) require(d >= 0.0 && d <= 1.0, "decay values must be in [0,1]");
  require(signal_strength >= 0.0 && signal_strength <= 1.0, "signal_strength must be in [0,1]");
}

double decay_multiplier(const MarketConfig& config, int64_t decision_time, int64_t t) {
  const int64_t days = static_cast<int64_t>(config.decay_profile.size());
  double base;
  if (t >= decision_time) {
    base = config.decay_profile.back();
  } else {
    const int64_t days_before = (decision_time - t - 1) / kDaySeconds;
    if (days_before >= days) return 1.0;
    base = config.decay_profile[static_cast<size_t>(days - 1 - days_before)];
  }
  return 1.0 - config.signal_strength * (1.0 - base);
}

Population generate_population(const MarketConfig& config) {
  config.validate();
  Population population;
  population.truth.reserve(config.n_customers);
  population.windows.reserve(config.n_customers);
  for (int64_t i = 0; i < config.n_customers; ++i) {
    CustomerStream stream = generate_customer(config, i);
    population.cdrs.insert(population.cdrs.end(), std::make_move_iterator(stream.cdrs.begin()),
                           std::make_move_iterator(stream.cdrs.end()));
    population.topups.insert(population.topups.end(),
                             std::make_move_iterator(stream.topups.begin()),
                             std::make_move_iterator(stream.topups.end()));
    population.truth.push_back(std::move(stream.truth));
    population.windows.push_back(std::move(stream.window));
  }
  return population;
}

MarketConfig second_market(const MarketConfig& config) {
  config.validate();
  MarketConfig out = config;
  out.market_id += "-m2";
  out.base_calls_per_day *= 1.25;
  out.mean_call_duration_s *= 0.85;
  out.topup_cadence_days *= 1.15;
  for (double& c : out.topup_coupons) c *= 2.0;
  out.churn_fraction *= 0.9;
  out.seed = derive_seed(config.seed, 0x6d32);
  return out;
}

MarketConfig load_market_config(const std::filesystem::path& path) {
  const cfg::ConfigFile file = cfg::load_config(path);
  MarketConfig config;
  if (file.has("market_id")) config.market_id = file.get("market_id");
  if (file.has("n_customers")) config.n_customers = cfg::to_i64("n_customers", file.get("n_customers"));
  if (file.has("horizon_days")) config.horizon_days = cfg::to_i64("horizon_days", file.get("horizon_days"));
  if (file.has("tz_offset")) config.tz_offset = cfg::to_i64("tz_offset", file.get("tz_offset"));
  if (file.has("base_calls_per_day"))
    config.base_calls_per_day = cfg::to_double("base_calls_per_day", file.get("base_calls_per_day"));
  if (file.has("rate_sigma")) config.rate_sigma = cfg::to_double("rate_sigma", file.get("rate_sigma"));
  if (file.has("diurnal_profile")) {
    const std::vector<double> weights =
        cfg::to_double_list("diurnal_profile", file.get("diurnal_profile"));
    if (weights.size() != config.diurnal_profile.size()) {
      throw std::runtime_error("config: diurnal_profile needs exactly 12 weights");
    }
    std::copy(weights.begin(), weights.end(), config.diurnal_profile.begin());
  }
  if (file.has("weekend_multiplier"))
    config.weekend_multiplier = cfg::to_double("weekend_multiplier", file.get("weekend_multiplier"));
  if (file.has("mean_call_duration_s"))
    config.mean_call_duration_s =
        cfg::to_double("mean_call_duration_s", file.get("mean_call_duration_s"));
  if (file.has("sms_fraction")) config.sms_fraction = cfg::to_double("sms_fraction", file.get("sms_fraction"));
  if (file.has("topup_cadence_days"))
    config.topup_cadence_days = cfg::to_double("topup_cadence_days", file.get("topup_cadence_days"));
  if (file.has("topup_coupons"))
    config.topup_coupons = cfg::to_double_list("topup_coupons", file.get("topup_coupons"));
  if (file.has("churn_fraction"))
    config.churn_fraction = cfg::to_double("churn_fraction", file.get("churn_fraction"));
  if (file.has("decay_profile"))
    config.decay_profile = cfg::to_double_list("decay_profile", file.get("decay_profile"));
  if (file.has("signal_strength"))
    config.signal_strength = cfg::to_double("signal_strength", file.get("signal_strength"));
  if (file.has("seed")) config.seed = cfg::to_u64("seed", file.get("seed"));
  const std::vector<std::string> unread = file.unread_keys();
  if (!unread.empty()) {
    throw std::runtime_error("config: unknown key '" + unread.front() + "' in " + path.string());
  }
  config.validate();
  return config;
}

void write_market_config(const MarketConfig& config, const std::filesystem::path& path) {
  config.validate();
  cfg::ConfigFile file;
  file.set("market_id", config.market_id);
  file.set("n_customers", std::to_string(config.n_customers));
  file.set("horizon_days", std::to_string(config.horizon_days));
  file.set("tz_offset", std::to_string(config.tz_offset));
  file.set("base_calls_per_day", cfg::format_double(config.base_calls_per_day));
  file.set("rate_sigma", cfg::format_double(config.rate_sigma));
  file.set("diurnal_profile", cfg::format_double_list(std::vector<double>(
                                  config.diurnal_profile.begin(), config.diurnal_profile.end())));
  file.set("weekend_multiplier", cfg::format_double(config.weekend_multiplier));
  file.set("mean_call_duration_s", cfg::format_double(config.mean_call_duration_s));
  file.set("sms_fraction", cfg::format_double(config.sms_fraction));
  file.set("topup_cadence_days", cfg::format_double(config.topup_cadence_days));
  file.set("topup_coupons", cfg::format_double_list(config.topup_coupons));
  file.set("churn_fraction", cfg::format_double(config.churn_fraction));
  file.set("decay_profile", cfg::format_double_list(config.decay_profile));
  file.set("signal_strength", cfg::format_double(config.signal_strength));
  file.set("seed", std::to_string(config.seed));
  cfg::write_config(file, path);
}

void write_ground_truth(const std::vector<GroundTruthEntry>& truth,
                        const std::filesystem::path& path) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("ground truth: cannot open " + tmp.string());
    out << "customer_id,latent_churner,decision_time\n";
    for (const GroundTruthEntry& entry : truth) {
      out << entry.customer_id << ',' << (entry.latent_churner ? 1 : 0) << ','
          << entry.decision_time << '\n';
    }
    if (!out) throw std::runtime_error("ground truth: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<GroundTruthEntry> load_ground_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("ground truth: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("ground truth: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "customer_id,latent_churner,decision_time") {
    throw std::runtime_error("ground truth: missing or wrong header in " + path.string());
  }
  std::vector<GroundTruthEntry> truth;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const size_t c1 = line.find(',');
    const size_t c2 = c1 == std::string::npos ? std::string::npos : line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
      throw std::runtime_error("ground truth: expected 3 fields at line " + std::to_string(line_no));
    }
    GroundTruthEntry entry;
    entry.customer_id = line.substr(0, c1);
    const std::string flag = line.substr(c1 + 1, c2 - c1 - 1);
    if (flag == "0") {
      entry.latent_churner = false;
    } else if (flag == "1") {
      entry.latent_churner = true;
    } else {
      throw std::runtime_error("ground truth: invalid churner flag at line " +
                               std::to_string(line_no));
    }
    const std::string when = line.substr(c2 + 1);
    auto [p, ec] = std::from_chars(when.data(), when.data() + when.size(), entry.decision_time);
    if (ec != std::errc{} || p != when.data() + when.size()) {
      throw std::runtime_error("ground truth: invalid decision time at line " +
                               std::to_string(line_no));
    }
    truth.push_back(std::move(entry));
  }
  return truth;
}

}  // namespace churngrid::synth
