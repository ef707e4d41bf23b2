#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "churngrid/events.hpp"
#include "churngrid/ingest.hpp"

namespace churngrid::synth {

// All generated timestamps live on or after this instant: the UTC epoch second
// at which a market with tz_offset 0 reads Monday 2015-01-05 00:00 local time.
inline constexpr int64_t kBaseMondayUtc = 1420416000;

struct MarketConfig {
  std::string market_id = "market-1";
  int64_t n_customers = 4000;
  int64_t horizon_days = 84;
  int64_t tz_offset = 3600;

  // Mean calls/day varies across customers as a mean-preserving lognormal.
  double base_calls_per_day = 5.0;
  double rate_sigma = 0.5;
  // Relative weight of each 2-hour local day-slice; normalized internally.
  std::array<double, events::kSlicesPerDay> diurnal_profile = {0.2, 0.1, 0.1, 0.5, 1.2, 1.5,
                                                              1.4, 1.3, 1.5, 1.8, 1.2, 0.5};
  double weekend_multiplier = 0.7;
  double mean_call_duration_s = 180.0;
  double sms_fraction = 0.15;

  double topup_cadence_days = 9.0;
  std::vector<double> topup_coupons = {5.0, 10.0, 15.0, 30.0};

  double churn_fraction = 0.35;
  // Per-day activity multiplier over a churner's final decay_profile.size()
  // days before the decision time; index 0 is the earliest day, the last
  // entry also applies after the decision.
  std::vector<double> decay_profile = {0.95, 0.88, 0.80, 0.70, 0.60,
                                       0.48, 0.36, 0.25, 0.15, 0.08};
  double signal_strength = 0.9;

  uint64_t seed = 20150105;

  double topup_saturation() const;  // largest single coupon value
  int64_t start_time() const;       // UTC second of local Monday 2015-01-05 00:00
  int64_t horizon_end() const;
  void validate() const;  // throws std::invalid_argument on bad values
};

struct GroundTruthEntry {
  std::string customer_id;
  bool latent_churner = false;
  int64_t decision_time = 0;  // 0 for non-churners

  bool operator==(const GroundTruthEntry&) const = default;
};

struct Population {
  std::vector<events::CdrRecord> cdrs;
  std::vector<events::TopupRecord> topups;
  std::vector<GroundTruthEntry> truth;
  // One observation window per customer, labeled from the generated top-up
  // stream; the split field is a placeholder until dataset::split runs.
  std::vector<ingest::ManifestEntry> windows;
};

// Activity multiplier the decay profile implies at time t for a churner whose
// decision falls at decision_time, already scaled by signal_strength.
double decay_multiplier(const MarketConfig& config, int64_t decision_time, int64_t t);

Population generate_population(const MarketConfig& config);

// Perturbed sibling market: shifted rates, doubled coupon set, fresh seed.
MarketConfig second_market(const MarketConfig& config);

MarketConfig load_market_config(const std::filesystem::path& path);
void write_market_config(const MarketConfig& config, const std::filesystem::path& path);

void write_ground_truth(const std::vector<GroundTruthEntry>& truth,
                        const std::filesystem::path& path);
std::vector<GroundTruthEntry> load_ground_truth(const std::filesystem::path& path);

}  // namespace churngrid::synth
