#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace churngrid::events {

// Time-slice coordinate system: 2-hour slices, 12 per day, 336 per 28-day
// observation window, 84 per week.
inline constexpr int64_t kSliceSeconds = 7200;
inline constexpr int kSlicesPerDay = 12;
inline constexpr int kWindowDays = 28;
inline constexpr int kWindowSlices = kWindowDays * kSlicesPerDay;  // 336
inline constexpr int kSlicesPerWeek = 7 * kSlicesPerDay;           // 84
inline constexpr int64_t kDaySeconds = 86400;
inline constexpr int64_t kWindowSeconds = kWindowDays * kDaySeconds;

enum class Direction { kMoc, kMtc };
enum class Service { kVoice, kSms };

// Rows of the activity grid, top to bottom.
enum class ActivityRow : int { kMoc = 0, kMtc = 1, kTopup = 2 };
inline constexpr int kGridRows = 3;

struct CdrRecord {
  std::string customer_id;
  int64_t timestamp = 0;  // epoch seconds UTC, > 0
  Direction direction = Direction::kMoc;
  Service service = Service::kVoice;
  int64_t duration_s = 0;  // >= 0, 0 for SMS
  std::string cell_id;     // optional, empty when absent
  std::string counterpart;  // optional hashed token, empty when absent
};

struct TopupRecord {
  std::string customer_id;
  int64_t timestamp = 0;  // epoch seconds UTC, > 0
  double amount = 0.0;    // > 0
};

struct SliceCoord {
  int column = 0;  // [0, 335]
  ActivityRow row = ActivityRow::kMoc;
};

// 28-day observation window. `start` is epoch seconds UTC; the window is
// aligned to a 2-hour slice boundary in market-local time, where local
// time = UTC + tz_offset. The label window is [start + 28d, start + 56d).
struct ObservationWindow {
  int64_t start = 0;
  int64_t tz_offset = 0;

  int64_t end() const { return start + kWindowSeconds; }
  int64_t label_start() const { return end(); }
  int64_t label_end() const { return start + 2 * kWindowSeconds; }
  bool aligned() const { return ((start + tz_offset) % kSliceSeconds + kSliceSeconds) % kSliceSeconds == 0; }
};

struct CustomerTimeline {
  std::string customer_id;
  std::vector<CdrRecord> cdrs;      // sorted ascending by timestamp
  std::vector<TopupRecord> topups;  // sorted ascending by timestamp
};

// Raw per-slice quantities before any intensity mapping: seconds for the
// MOC/MTC rows, currency for the topup row. Unclamped.
struct ActivityGrid {
  std::array<std::array<double, kWindowSlices>, kGridRows> values{};

  double& at(ActivityRow row, int col) { return values[static_cast<int>(row)][col]; }
  double at(ActivityRow row, int col) const { return values[static_cast<int>(row)][col]; }
};

// Column of the slice containing `timestamp`, or nullopt when the
// timestamp falls outside the window (the end is exclusive).
std::optional<int> slice_index(int64_t timestamp, const ObservationWindow& window);

// Filters to one customer's records and sorts both lists by timestamp.
CustomerTimeline build_timeline(std::span<const CdrRecord> cdrs,
                                std::span<const TopupRecord> topups,
                                const std::string& customer_id);

// Sums event quantities into the 336x3 grid. Calls are attributed entirely
// to the slice of their start timestamp; an SMS contributes
// `sms_equivalent_seconds` to its direction's row (0 excludes SMS).
ActivityGrid aggregate(const CustomerTimeline& timeline, const ObservationWindow& window,
                       double sms_equivalent_seconds);

const char* to_string(Direction d);
const char* to_string(Service s);
std::optional<Direction> direction_from_string(const std::string& s);
std::optional<Service> service_from_string(const std::string& s);

}  // namespace churngrid::events
