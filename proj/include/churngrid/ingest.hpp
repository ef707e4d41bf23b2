#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "churngrid/events.hpp"

namespace churngrid::ingest {

// Malformed data lines are collected, never fatal; only a bad header aborts.
struct LineError {
  size_t line = 0;  // 1-based, counting the header line as line 1
  std::string reason;
};

struct CdrParseResult {
  std::vector<events::CdrRecord> records;
  std::vector<LineError> errors;
};

struct TopupParseResult {
  std::vector<events::TopupRecord> records;
  std::vector<LineError> errors;
};

inline constexpr const char* kCdrHeader =
    "customer_id,timestamp,direction,service,duration_s,cell_id,counterpart";
inline constexpr const char* kTopupHeader = "customer_id,timestamp,amount";

CdrParseResult parse_cdr_csv(std::istream& in);
TopupParseResult parse_topup_csv(std::istream& in);

void write_cdr_csv(std::ostream& out, std::span<const events::CdrRecord> records);
void write_topup_csv(std::ostream& out, std::span<const events::TopupRecord> records);

enum class Split { kTrain, kVal, kTest };
const char* to_string(Split s);
std::optional<Split> split_from_string(const std::string& s);

struct ManifestEntry {
  std::string customer_id;
  int64_t window_start = 0;
  Split split = Split::kTrain;
  int label = 0;        // {0,1}
  int crop_offset = 0;  // [0,83]
};

struct DatasetManifest {
  int schema_version = 1;
  std::string market_id;
  int64_t tz_offset = 0;
  std::vector<ManifestEntry> entries;
  std::optional<uint64_t> generator_seed;

  bool operator==(const DatasetManifest&) const = default;
};

// Validates invariants (unique ids, label/offset ranges), then writes
// atomically: temp file in the target directory, then rename.
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

// Fails on version mismatch or any invariant violation.
DatasetManifest load_manifest(const std::filesystem::path& path);

inline bool operator==(const ManifestEntry& a, const ManifestEntry& b) {
  return a.customer_id == b.customer_id && a.window_start == b.window_start &&
         a.split == b.split && a.label == b.label && a.crop_offset == b.crop_offset;
}

}  // namespace churngrid::ingest
