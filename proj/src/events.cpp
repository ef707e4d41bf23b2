#include "churngrid/events.hpp"

#include <algorithm>

namespace churngrid::events {

std::optional<int> slice_index(int64_t timestamp, const ObservationWindow& window) {
  const int64_t delta = timestamp - window.start;
  if (delta < 0 || delta >= kWindowSeconds) return std::nullopt;
  return static_cast<int>(delta / kSliceSeconds);
}

CustomerTimeline build_timeline(std::span<const CdrRecord> cdrs,
                                std::span<const TopupRecord> topups,
                                const std::string& customer_id) {
  CustomerTimeline timeline;
  timeline.customer_id = customer_id;
  for (const auto& cdr : cdrs) {
    if (cdr.customer_id == customer_id) timeline.cdrs.push_back(cdr);
  }
  for (const auto& topup : topups) {
    if (topup.customer_id == customer_id) timeline.topups.push_back(topup);
  }
  std::stable_sort(timeline.cdrs.begin(), timeline.cdrs.end(),
                   [](const CdrRecord& a, const CdrRecord& b) { return a.timestamp < b.timestamp; });
  std::stable_sort(timeline.topups.begin(), timeline.topups.end(),
                   [](const TopupRecord& a, const TopupRecord& b) { return a.timestamp < b.timestamp; });
  return timeline;
}

ActivityGrid aggregate(const CustomerTimeline& timeline, const ObservationWindow& window,
                       double sms_equivalent_seconds) {
  ActivityGrid grid;
  for (const auto& cdr : timeline.cdrs) {
    const auto col = slice_index(cdr.timestamp, window);
    if (!col) continue;
    const double effective_s = cdr.service == Service::kSms
                                   ? sms_equivalent_seconds
                                   : static_cast<double>(cdr.duration_s);
    const ActivityRow row =
        cdr.direction == Direction::kMoc ? ActivityRow::kMoc : ActivityRow::kMtc;
    grid.at(row, *col) += effective_s;
  }
  for (const auto& topup : timeline.topups) {
    const auto col = slice_index(topup.timestamp, window);
    if (!col) continue;
    grid.at(ActivityRow::kTopup, *col) += topup.amount;
  }
  return grid;
}

const char* to_string(Direction d) { return d == Direction::kMoc ? "MOC" : "MTC"; }
const char* to_string(Service s) { return s == Service::kVoice ? "VOICE" : "SMS"; }

std::optional<Direction> direction_from_string(const std::string& s) {
  if (s == "MOC") return Direction::kMoc;
  if (s == "MTC") return Direction::kMtc;
  return std::nullopt;
}

std::optional<Service> service_from_string(const std::string& s) {
  if (s == "VOICE") return Service::kVoice;
  if (s == "SMS") return Service::kSms;
  return std::nullopt;
}

}  // namespace churngrid::events
