#include <fstream>
#include <sstream>

#include "churngrid/events.hpp"
#include "churngrid/ingest.hpp"
#include "doctest.h"

using namespace churngrid;
using events::ActivityRow;
using events::CdrRecord;
using events::Direction;
using events::ObservationWindow;
using events::Service;
using events::TopupRecord;

namespace {

// Any slice-aligned instant works as a window start; this one is an aligned
// local midnight for tz +3600.
constexpr int64_t kStart = 1420412400;
constexpr int64_t kTz = 3600;

CdrRecord call(int64_t ts, Direction d, int64_t dur, Service s = Service::kVoice) {
  CdrRecord r;
  r.customer_id = "c1";
  r.timestamp = ts;
  r.direction = d;
  r.service = s;
  r.duration_s = s == Service::kSms ? 0 : dur;
  return r;
}

}  // namespace

TEST_CASE("window arithmetic and alignment") {
  ObservationWindow w{kStart, kTz};
  CHECK(w.aligned());
  CHECK(w.end() == kStart + 28 * 86400);
  CHECK(w.label_start() == w.end());
  CHECK(w.label_end() == kStart + 56 * 86400);
  CHECK_FALSE(ObservationWindow{kStart + 1, kTz}.aligned());
  // Negative local time must not break the modulo.
  CHECK(ObservationWindow{-7200, 0}.aligned());
  CHECK(ObservationWindow{7200, -7200}.aligned());
}

TEST_CASE("slice_index maps boundaries correctly") {
  ObservationWindow w{kStart, kTz};
  CHECK(events::slice_index(kStart, w) == 0);
  CHECK(events::slice_index(kStart + 7199, w) == 0);
  CHECK(events::slice_index(kStart + 7200, w) == 1);
  CHECK(events::slice_index(w.end() - 1, w) == 335);
  CHECK_FALSE(events::slice_index(w.end(), w).has_value());
  CHECK_FALSE(events::slice_index(kStart - 1, w).has_value());
}

TEST_CASE("aggregate routes events to the right rows and slices") {
  ObservationWindow w{kStart, kTz};
  events::CustomerTimeline t;
  t.customer_id = "c1";
  t.cdrs.push_back(call(kStart + 100, Direction::kMoc, 1200));
  t.cdrs.push_back(call(kStart + 7200 + 5, Direction::kMtc, 300));
  t.cdrs.push_back(call(kStart + 7200 + 6, Direction::kMtc, 60));
  t.cdrs.push_back(call(kStart - 1, Direction::kMoc, 999));      // before window
  t.cdrs.push_back(call(w.end(), Direction::kMoc, 999));         // after window
  t.cdrs.push_back(call(kStart + 200, Direction::kMoc, 0, Service::kSms));
  t.topups.push_back({"c1", kStart + 3 * 7200 + 1, 15.0});
  t.topups.push_back({"c1", kStart + 3 * 7200 + 2, 5.0});

  const events::ActivityGrid g = events::aggregate(t, w, 60.0);
  CHECK(g.at(ActivityRow::kMoc, 0) == 1200.0 + 60.0);
  CHECK(g.at(ActivityRow::kMtc, 1) == 360.0);
  CHECK(g.at(ActivityRow::kTopup, 3) == 20.0);
  CHECK(g.at(ActivityRow::kMoc, 1) == 0.0);
  CHECK(g.at(ActivityRow::kMtc, 0) == 0.0);

  // sms_equivalent_seconds == 0 excludes SMS entirely.
  const events::ActivityGrid g0 = events::aggregate(t, w, 0.0);
  CHECK(g0.at(ActivityRow::kMoc, 0) == 1200.0);
}

TEST_CASE("build_timeline filters by customer and sorts by timestamp") {
  std::vector<CdrRecord> cdrs;
  CdrRecord a = call(kStart + 500, Direction::kMoc, 10);
  CdrRecord b = call(kStart + 100, Direction::kMtc, 20);
  CdrRecord other = call(kStart + 1, Direction::kMoc, 30);
  other.customer_id = "c2";
  cdrs = {a, b, other};
  std::vector<TopupRecord> topups = {{"c2", kStart, 5.0}, {"c1", kStart + 9, 10.0}};

  const events::CustomerTimeline t = events::build_timeline(cdrs, topups, "c1");
  REQUIRE(t.cdrs.size() == 2);
  CHECK(t.cdrs[0].timestamp == kStart + 100);
  CHECK(t.cdrs[1].timestamp == kStart + 500);
  REQUIRE(t.topups.size() == 1);
  CHECK(t.topups[0].amount == 10.0);
}

TEST_CASE("direction and service string round-trips") {
  CHECK(events::direction_from_string("MOC") == Direction::kMoc);
  CHECK(events::direction_from_string("MTC") == Direction::kMtc);
  CHECK_FALSE(events::direction_from_string("moc").has_value());
  CHECK(events::service_from_string("VOICE") == Service::kVoice);
  CHECK(events::service_from_string("SMS") == Service::kSms);
  CHECK(std::string(events::to_string(Direction::kMoc)) == "MOC");
  CHECK(std::string(events::to_string(Service::kSms)) == "SMS");
}

TEST_CASE("cdr csv round-trips and collects malformed lines") {
  std::vector<CdrRecord> records;
  CdrRecord r = call(kStart + 42, Direction::kMtc, 77);
  r.cell_id = "cell9";
  r.counterpart = "p123";
  records.push_back(r);
  records.push_back(call(kStart + 50, Direction::kMoc, 0, Service::kSms));

  std::ostringstream out;
  ingest::write_cdr_csv(out, records);
  std::istringstream in(out.str());
  const ingest::CdrParseResult parsed = ingest::parse_cdr_csv(in);
  CHECK(parsed.errors.empty());
  REQUIRE(parsed.records.size() == 2);
  CHECK(parsed.records[0].cell_id == "cell9");
  CHECK(parsed.records[0].counterpart == "p123");
  CHECK(parsed.records[0].duration_s == 77);
  CHECK(parsed.records[1].service == Service::kSms);

  std::istringstream bad(std::string(ingest::kCdrHeader) +
                         "\nc1,100,MOC,VOICE,60,cell,p\n"
                         "c1,notanumber,MOC,VOICE,60,,\n"
                         "c1,100,SIDEWAYS,VOICE,60,,\n"
                         "c1,100,MOC,VOICE,-5,,\n");
  const ingest::CdrParseResult mixed = ingest::parse_cdr_csv(bad);
  CHECK(mixed.records.size() == 1);
  REQUIRE(mixed.errors.size() == 3);
  CHECK(mixed.errors[0].line == 3);
  CHECK(mixed.errors[1].line == 4);
  CHECK(mixed.errors[2].line == 5);
}

TEST_CASE("cdr csv rejects a wrong header outright") {
  std::istringstream in("id,when\n");
  CHECK_THROWS(ingest::parse_cdr_csv(in));
}

TEST_CASE("topup csv round-trips") {
  std::vector<TopupRecord> records = {{"c1", kStart + 1, 15.0}, {"c2", kStart + 2, 7.5}};
  std::ostringstream out;
  ingest::write_topup_csv(out, records);
  std::istringstream in(out.str());
  const ingest::TopupParseResult parsed = ingest::parse_topup_csv(in);
  CHECK(parsed.errors.empty());
  REQUIRE(parsed.records.size() == 2);
  CHECK(parsed.records[1].amount == 7.5);

  std::istringstream bad(std::string(ingest::kTopupHeader) + "\nc1,100,0\nc1,100,-3\nc1,100,5\n");
  const ingest::TopupParseResult mixed = ingest::parse_topup_csv(bad);
  CHECK(mixed.records.size() == 1);  // zero/negative amounts rejected
  CHECK(mixed.errors.size() == 2);
}

TEST_CASE("manifest round-trips through disk") {
  ingest::DatasetManifest m;
  m.market_id = "market-t";
  m.tz_offset = -3600;
  m.generator_seed = 777;
  m.entries.push_back({"c1", kStart, ingest::Split::kTrain, 1, 12});
  m.entries.push_back({"c2", kStart + 7200, ingest::Split::kVal, 0, 13});
  m.entries.push_back({"c3", kStart, ingest::Split::kTest, 0, 12});

  const auto path = std::filesystem::temp_directory_path() / "churngrid_manifest_test.txt";
  ingest::write_manifest(m, path);
  const ingest::DatasetManifest back = ingest::load_manifest(path);
  CHECK(back == m);
  std::filesystem::remove(path);
}

TEST_CASE("manifest write rejects invalid entries") {
  const auto path = std::filesystem::temp_directory_path() / "churngrid_manifest_bad.txt";
  ingest::DatasetManifest dup;
  dup.market_id = "m";
  dup.entries.push_back({"c1", kStart, ingest::Split::kTrain, 0, 0});
  dup.entries.push_back({"c1", kStart, ingest::Split::kTest, 1, 0});
  CHECK_THROWS(ingest::write_manifest(dup, path));

  ingest::DatasetManifest bad_label;
  bad_label.market_id = "m";
  bad_label.entries.push_back({"c1", kStart, ingest::Split::kTrain, 2, 0});
  CHECK_THROWS(ingest::write_manifest(bad_label, path));

  ingest::DatasetManifest bad_offset;
  bad_offset.market_id = "m";
  bad_offset.entries.push_back({"c1", kStart, ingest::Split::kTrain, 0, 84});
  CHECK_THROWS(ingest::write_manifest(bad_offset, path));
}

TEST_CASE("manifest load rejects tampered files") {
  const auto path = std::filesystem::temp_directory_path() / "churngrid_manifest_tamper.txt";
  {
    std::ofstream out(path);
    out << "CHURNGRID-MANIFEST v2\n";
  }
  CHECK_THROWS(ingest::load_manifest(path));
  std::filesystem::remove(path);
  CHECK_THROWS(ingest::load_manifest(path));  // missing file
}

TEST_CASE("split names round-trip") {
  for (auto s : {ingest::Split::kTrain, ingest::Split::kVal, ingest::Split::kTest}) {
    CHECK(ingest::split_from_string(ingest::to_string(s)) == s);
  }
  CHECK_FALSE(ingest::split_from_string("holdout").has_value());
}
