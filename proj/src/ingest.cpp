#include "churngrid/ingest.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace churngrid::ingest {
namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  size_t pos = 0;
  for (;;) {
    const size_t comma = line.find(',', pos);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(pos));
      return fields;
    }
    fields.push_back(line.substr(pos, comma - pos));
    pos = comma + 1;
  }
}

std::optional<int64_t> parse_i64(const std::string& s) {
  int64_t value = 0;
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || s.empty()) return std::nullopt;
  return value;
}

std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double value = 0.0;
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

std::string read_line(std::istream& in, bool& ok) {
  std::string line;
  ok = static_cast<bool>(std::getline(in, line));
  if (ok && !line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

CdrParseResult parse_cdr_csv(std::istream& in) {
  bool ok = false;
  const std::string header = read_line(in, ok);
  if (!ok || header != kCdrHeader) {
    throw std::runtime_error("cdr csv: missing or wrong header");
  }
  CdrParseResult result;
  size_t line_no = 1;
  for (;;) {
    const std::string line = read_line(in, ok);
    if (!ok) break;
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 7) {
      result.errors.push_back({line_no, "expected 7 fields"});
      continue;
    }
    events::CdrRecord rec;
    rec.customer_id = fields[0];
    if (rec.customer_id.empty()) {
      result.errors.push_back({line_no, "empty customer_id"});
      continue;
    }
    const auto ts = parse_i64(fields[1]);
    if (!ts || *ts <= 0) {
      result.errors.push_back({line_no, "invalid timestamp"});
      continue;
    }
    rec.timestamp = *ts;
    const auto dir = events::direction_from_string(fields[2]);
    if (!dir) {
      result.errors.push_back({line_no, "invalid direction"});
      continue;
    }
    rec.direction = *dir;
    const auto svc = events::service_from_string(fields[3]);
    if (!svc) {
      result.errors.push_back({line_no, "invalid service"});
      continue;
    }
    rec.service = *svc;
    const auto dur = parse_i64(fields[4]);
    if (!dur || *dur < 0) {
      result.errors.push_back({line_no, "invalid duration"});
      continue;
    }
    if (rec.service == events::Service::kSms && *dur != 0) {
      result.errors.push_back({line_no, "nonzero duration for sms"});
      continue;
    }
    rec.duration_s = *dur;
    rec.cell_id = fields[5];
    rec.counterpart = fields[6];
    result.records.push_back(std::move(rec));
  }
  return result;
}

TopupParseResult parse_topup_csv(std::istream& in) {
  bool ok = false;
  const std::string header = read_line(in, ok);
  if (!ok || header != kTopupHeader) {
    throw std::runtime_error("topup csv: missing or wrong header");
  }
  TopupParseResult result;
  size_t line_no = 1;
  for (;;) {
    const std::string line = read_line(in, ok);
    if (!ok) break;
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 3) {
      result.errors.push_back({line_no, "expected 3 fields"});
      continue;
    }
    events::TopupRecord rec;
    rec.customer_id = fields[0];
    if (rec.customer_id.empty()) {
      result.errors.push_back({line_no, "empty customer_id"});
      continue;
    }
    const auto ts = parse_i64(fields[1]);
    if (!ts || *ts <= 0) {
      result.errors.push_back({line_no, "invalid timestamp"});
      continue;
    }
    rec.timestamp = *ts;
    const auto amount = parse_double(fields[2]);
    if (!amount || !(*amount > 0.0)) {
      result.errors.push_back({line_no, "non-positive amount"});
      continue;
    }
    rec.amount = *amount;
    result.records.push_back(std::move(rec));
  }
  return result;
}

void write_cdr_csv(std::ostream& out, std::span<const events::CdrRecord> records) {
  out << kCdrHeader << '\n';
  for (const auto& rec : records) {
    out << rec.customer_id << ',' << rec.timestamp << ',' << events::to_string(rec.direction)
        << ',' << events::to_string(rec.service) << ',' << rec.duration_s << ',' << rec.cell_id
        << ',' << rec.counterpart << '\n';
  }
}

void write_topup_csv(std::ostream& out, std::span<const events::TopupRecord> records) {
  out << kTopupHeader << '\n';
  for (const auto& rec : records) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", rec.amount);
    out << rec.customer_id << ',' << rec.timestamp << ',' << buf << '\n';
  }
}

const char* to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

std::optional<Split> split_from_string(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  return std::nullopt;
}

namespace {

void validate_manifest(const DatasetManifest& m) {
  if (m.schema_version != 1) throw std::runtime_error("manifest: unsupported schema version");
  if (m.market_id.empty()) throw std::runtime_error("manifest: empty market_id");
  std::unordered_set<std::string> seen;
  for (const auto& e : m.entries) {
    if (e.customer_id.empty()) throw std::runtime_error("manifest: empty customer_id");
    if (!seen.insert(e.customer_id).second) {
      throw std::runtime_error("manifest: duplicate customer_id " + e.customer_id);
    }
    if (e.label != 0 && e.label != 1) throw std::runtime_error("manifest: invalid label");
    if (e.crop_offset < 0 || e.crop_offset >= events::kSlicesPerWeek) {
      throw std::runtime_error("manifest: crop_offset out of range");
    }
  }
}

}  // namespace

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  validate_manifest(manifest);
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("manifest: cannot open " + tmp.string());
    out << "CHURNGRID-MANIFEST v" << manifest.schema_version << '\n';
    out << "market_id=" << manifest.market_id << '\n';
    out << "tz_offset=" << manifest.tz_offset << '\n';
    if (manifest.generator_seed) out << "generator_seed=" << *manifest.generator_seed << '\n';
    out << "entries=" << manifest.entries.size() << '\n';
    for (const auto& e : manifest.entries) {
      out << e.customer_id << ',' << e.window_start << ',' << to_string(e.split) << ','
          << e.label << ',' << e.crop_offset << '\n';
    }
    if (!out) throw std::runtime_error("manifest: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("manifest: cannot open " + path.string());
  bool ok = false;
  const std::string header = read_line(in, ok);
  const std::string prefix = "CHURNGRID-MANIFEST v";
  if (!ok || header.rfind(prefix, 0) != 0) {
    throw std::runtime_error("manifest: bad header line");
  }
  const auto version = parse_i64(header.substr(prefix.size()));
  if (!version || *version != 1) {
    throw std::runtime_error("manifest: unsupported schema version");
  }
  DatasetManifest m;
  m.schema_version = static_cast<int>(*version);
  int64_t expected_entries = -1;
  for (;;) {
    const std::string line = read_line(in, ok);
    if (!ok) throw std::runtime_error("manifest: truncated before entries");
    const size_t eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("manifest: malformed key line: " + line);
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "market_id") {
      m.market_id = value;
    } else if (key == "tz_offset") {
      const auto tz = parse_i64(value);
      if (!tz) throw std::runtime_error("manifest: bad tz_offset");
      m.tz_offset = *tz;
    } else if (key == "generator_seed") {
      const auto seed = parse_i64(value);
      if (!seed) throw std::runtime_error("manifest: bad generator_seed");
      m.generator_seed = static_cast<uint64_t>(*seed);
    } else if (key == "entries") {
      const auto n = parse_i64(value);
      if (!n || *n < 0) throw std::runtime_error("manifest: bad entry count");
      expected_entries = *n;
      break;
    } else {
      throw std::runtime_error("manifest: unknown key " + key);
    }
  }
  for (int64_t i = 0; i < expected_entries; ++i) {
    const std::string line = read_line(in, ok);
    if (!ok) throw std::runtime_error("manifest: truncated entry list");
    const auto fields = split_fields(line);
    if (fields.size() != 5) throw std::runtime_error("manifest: malformed entry: " + line);
    ManifestEntry e;
    e.customer_id = fields[0];
    const auto start = parse_i64(fields[1]);
    if (!start) throw std::runtime_error("manifest: bad window_start");
    e.window_start = *start;
    const auto split = split_from_string(fields[2]);
    if (!split) throw std::runtime_error("manifest: bad split");
    e.split = *split;
    const auto label = parse_i64(fields[3]);
    if (!label) throw std::runtime_error("manifest: bad label");
    e.label = static_cast<int>(*label);
    const auto offset = parse_i64(fields[4]);
    if (!offset) throw std::runtime_error("manifest: bad crop_offset");
    e.crop_offset = static_cast<int>(*offset);
    m.entries.push_back(std::move(e));
  }
  validate_manifest(m);
  return m;
}

}  // namespace churngrid::ingest
