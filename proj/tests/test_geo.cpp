#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <string>

#include "bisg/geo.hpp"

using namespace bisg;

namespace {

std::string temp_path(const char* name) {
  auto dir = std::filesystem::temp_directory_path() / "bisg_test_geo";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

PersonRecord make_record(const char* id, const char* geo, std::optional<Race> race) {
  PersonRecord rec;
  rec.record_id = id;
  rec.surname_key = "X";
  rec.geo_id = geo;
  rec.true_race = race;
  return rec;
}

}  // namespace

TEST_CASE("geo counts load, sum duplicates, and reject bad rows") {
  std::string path = temp_path("geo.csv");
  write_file_bytes(path,
                   "geo_id,white,black,hispanic,asian,other\n"
                   "B1,8,2,0,0,0\n"
                   "B2,10,0,0,5,0\n"
                   "B2,0,0,3,0,0\n"
                   "BAD,-1,0,0,0,0\n"
                   "FRAC,1.5,0,0,0,0\n"
                   "B3,0,0,0,0,0\n");
  auto result = load_geo_counts(path, "block");
  CHECK(result.report.rows_loaded == 4);
  CHECK(result.report.duplicates == 1);
  CHECK(result.report.rows_rejected == 2);
  REQUIRE(result.table.size() == 3);
  CHECK(result.table.counts.at("B2") == RaceVector::counts(10, 0, 3, 5, 0));
  CHECK(result.table.level_label == "block");
  CHECK(result.table.totals == RaceVector::counts(18, 2, 3, 5, 0));
}

TEST_CASE("geo loader rejects bad headers and empty tables") {
  std::string bad_header = temp_path("geo_bad.csv");
  write_file_bytes(bad_header, "geo,counts\nB1,10\n");
  CHECK_THROWS_AS(load_geo_counts(bad_header), std::runtime_error);
  std::string no_rows = temp_path("geo_none.csv");
  write_file_bytes(no_rows, "geo_id,white,black,hispanic,asian,other\n");
  CHECK_THROWS_AS(load_geo_counts(no_rows), std::runtime_error);
}

TEST_CASE("p_race_given_geo divides counts by the block total exactly") {
  GeoTable table;
  table.counts["B1"] = RaceVector::counts(8, 2, 0, 0, 0);
  table.counts["EMPTY"] = RaceVector::counts(0, 0, 0, 0, 0);
  table.rebuild_totals();

  RaceVector p = p_race_given_geo(table, "B1");
  CHECK(p[Race::White] == 0.8);
  CHECK(p[Race::Black] == 0.2);
  CHECK(p[Race::Hispanic] == 0.0);
  CHECK(p[Race::Asian] == 0.0);
  CHECK(p[Race::Other] == 0.0);
  CHECK(validate_probability_vector(p));

  CHECK_THROWS_AS(p_race_given_geo(table, "NOWHERE"), std::out_of_range);
  CHECK_THROWS_AS(p_race_given_geo(table, "EMPTY"), std::domain_error);
}

TEST_CASE("aggregate_shares pools the whole table") {
  GeoTable table;
  table.counts["B1"] = RaceVector::counts(8, 2, 0, 0, 0);
  table.counts["B2"] = RaceVector::counts(2, 8, 10, 0, 0);
  table.rebuild_totals();
  RaceVector shares = table.aggregate_shares();
  CHECK(shares[Race::White] == 10.0 / 30.0);
  CHECK(shares[Race::Hispanic] == 10.0 / 30.0);

  GeoTable empty_table;
  empty_table.counts["Z"] = RaceVector::counts(0, 0, 0, 0, 0);
  empty_table.rebuild_totals();
  CHECK_THROWS_AS(empty_table.aggregate_shares(), std::domain_error);
}

TEST_CASE("zero_count_summary classifies records by own-race census count") {
  GeoTable table;
  table.counts["B1"] = RaceVector::counts(8, 0, 1, 0, 0);
  table.counts["B2"] = RaceVector::counts(0, 5, 0, 0, 0);
  table.rebuild_totals();

  std::vector<PersonRecord> records = {
      make_record("r1", "B1", Race::White),     // count 8, not zero
      make_record("r2", "B1", Race::Black),     // count 0, zero
      make_record("r3", "B2", Race::White),     // count 0, zero
      make_record("r4", "B2", Race::Black),     // count 5, not zero
      make_record("r5", "MISSING", Race::White),
      make_record("r6", "B1", std::nullopt),
  };
  auto summary = zero_count_summary(table, records);
  CHECK(summary.records_total[static_cast<int>(Race::White)] == 2);
  CHECK(summary.records_in_zero[static_cast<int>(Race::White)] == 1);
  CHECK(summary.records_total[static_cast<int>(Race::Black)] == 2);
  CHECK(summary.records_in_zero[static_cast<int>(Race::Black)] == 1);
  CHECK(summary.unresolved_geo == 1);
  CHECK(summary.missing_truth == 1);
  CHECK(summary.total_records() == 4);
  CHECK(summary.total_in_zero() == 2);
  CHECK(summary.share(Race::White) == 0.5);
  CHECK(summary.share(Race::Asian) == 0.0);  // no asian records at all
}

TEST_CASE("aggregation maps remap children onto parents") {
  std::string path = temp_path("agg.csv");
  write_file_bytes(path,
                   "child_id,parent_id\n"
                   "B1,T1\n"
                   "B2,T1\n"
                   "B3,T2\n");
  auto map = load_aggregation_map(path);
  REQUIRE(map.size() == 3);
  CHECK(map.at("B1") == "T1");

  GeoTable table;
  table.counts["B1"] = RaceVector::counts(8, 2, 0, 0, 0);
  table.counts["B2"] = RaceVector::counts(1, 1, 1, 1, 1);
  table.counts["B3"] = RaceVector::counts(0, 0, 4, 0, 0);
  table.counts["LOOSE"] = RaceVector::counts(3, 0, 0, 0, 0);
  table.rebuild_totals();

  GeoTable tracts = aggregate(table, map, "tract");
  REQUIRE(tracts.size() == 3);  // T1, T2, and the unmapped LOOSE
  CHECK(tracts.counts.at("T1") == RaceVector::counts(9, 3, 1, 1, 1));
  CHECK(tracts.counts.at("T2") == RaceVector::counts(0, 0, 4, 0, 0));
  CHECK(tracts.counts.at("LOOSE") == RaceVector::counts(3, 0, 0, 0, 0));
  CHECK(tracts.level_label == "tract");
  CHECK(tracts.totals == table.totals);

  std::vector<PersonRecord> records = {make_record("r1", "B2", Race::White),
                                       make_record("r2", "LOOSE", Race::White)};
  aggregate_records(records, map);
  CHECK(records[0].geo_id == "T1");
  CHECK(records[1].geo_id == "LOOSE");
}

TEST_CASE("aggregation map rejects conflicting parents") {
  std::string path = temp_path("agg_conflict.csv");
  write_file_bytes(path,
                   "child_id,parent_id\n"
                   "B1,T1\n"
                   "B1,T2\n");
  CHECK_THROWS_AS(load_aggregation_map(path), std::runtime_error);
}

TEST_CASE("geo counts persistence round-trips") {
  GeoTable table;
  table.counts["B2"] = RaceVector::counts(10, 0, 3, 5, 0);
  table.counts["B1"] = RaceVector::counts(8, 2, 0, 0, 0);
  table.rebuild_totals();
  std::string path = temp_path("geo_out.csv");
  save_geo_counts(table, path);

  auto loaded = load_geo_counts(path);
  REQUIRE(loaded.table.size() == 2);
  CHECK(loaded.table.counts.at("B1") == table.counts.at("B1"));
  CHECK(loaded.table.counts.at("B2") == table.counts.at("B2"));

  // Output is sorted by geo_id, so saving twice is byte-identical.
  std::string again = temp_path("geo_out2.csv");
  save_geo_counts(loaded.table, again);
  CHECK(read_file_bytes(path) == read_file_bytes(again));
}
