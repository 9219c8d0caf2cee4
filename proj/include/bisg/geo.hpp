#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "bisg/csv.hpp"
#include "bisg/race.hpp"

namespace bisg {

/// Census race-by-geography cross-tabulation: counts N_rg per geography id.
/// Flat id space; hierarchical rollups go through an explicit aggregation
/// map, never through id-format parsing.
struct GeoTable {
  std::unordered_map<std::string, RaceVector> counts;
  std::string level_label = "block";
  RaceVector totals = RaceVector::zeros();

  bool contains(const std::string& geo_id) const { return counts.find(geo_id) != counts.end(); }
  std::size_t size() const { return counts.size(); }

  void rebuild_totals() {
    totals = RaceVector::zeros();
    for (const auto& [id, vec] : counts) totals += vec;
  }

  /// Population share of each race across the whole table.
  RaceVector aggregate_shares() const {
    if (!(totals.sum() > 0.0)) {
      throw std::domain_error("geo table has zero total population");
    }
    return totals.normalized();
  }
};

struct GeoLoadReport {
  std::size_t rows_loaded = 0;
  std::size_t duplicates = 0;
  std::size_t rows_rejected = 0;
  std::vector<std::string> warnings;
};

struct GeoLoadResult {
  GeoTable table;
  GeoLoadReport report;
};

inline constexpr std::string_view kGeoHeader = "geo_id,white,black,hispanic,asian,other";

/// Loads the geo counts CSV. Duplicate geo_id rows are summed and counted;
/// rows with negative or non-integer counts are rejected and counted; an
/// empty table is an error.
inline GeoLoadResult load_geo_counts(const std::string& path, std::string level_label = "block") {
  CsvReader reader(path);
  std::vector<std::string> fields;
  if (!reader.next(fields)) throw std::runtime_error("geo counts file is empty: " + path);
  {
    std::string header;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) header.push_back(',');
      for (char c : fields[i]) header.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (header != kGeoHeader) {
      throw std::runtime_error("geo counts file has unexpected header: " + header);
    }
  }
  GeoLoadResult result;
  result.table.level_label = std::move(level_label);
  while (reader.next(fields)) {
    if (fields.size() == 1 && !fields[0].empty() && fields[0][0] == '#') continue;
    if (fields.size() != 1 + kNumRaces || fields[0].empty()) {
      ++result.report.rows_rejected;
      continue;
    }
    RaceVector row = RaceVector::zeros();
    bool ok = true;
    for (int r = 0; r < kNumRaces; ++r) {
      long long v = 0;
      if (!parse_long(fields[static_cast<std::size_t>(r + 1)], v) || v < 0) {
        ok = false;
        break;
      }
      row[r] = static_cast<double>(v);
    }
    if (!ok) {
      ++result.report.rows_rejected;
      continue;
    }
    auto [it, inserted] = result.table.counts.try_emplace(fields[0], row);
    if (!inserted) {
      it->second += row;
      ++result.report.duplicates;
    }
    ++result.report.rows_loaded;
  }
  if (result.table.counts.empty()) {
    throw std::runtime_error("geo counts file has no valid rows: " + path);
  }
  result.table.rebuild_totals();
  if (result.report.duplicates > 0) {
    result.report.warnings.push_back(std::to_string(result.report.duplicates) +
                                     " duplicate geo_id rows summed");
  }
  return result;
}

/// The unsmoothed BISG geographic prior: counts / N_g exactly, zeros
/// preserved. Unknown ids and empty geographies are errors, distinct from a
/// legitimate zero prior entry.
inline RaceVector p_race_given_geo(const GeoTable& table, const std::string& geo_id) {
  auto it = table.counts.find(geo_id);
  if (it == table.counts.end()) throw std::out_of_range("unknown geo_id: " + geo_id);
  if (!(it->second.sum() > 0.0)) {
    throw std::domain_error("geography has zero population: " + geo_id);
  }
  return it->second.normalized();
}

/// Per-race share of records living in a geography that reports zero members
/// of their own race. Records with an unknown geo_id or no truth label are
/// excluded and counted separately.
struct ZeroCountSummary {
  std::array<std::size_t, kNumRaces> records_total{};
  std::array<std::size_t, kNumRaces> records_in_zero{};
  std::size_t unresolved_geo = 0;
  std::size_t missing_truth = 0;

  double share(Race r) const {
    int i = static_cast<int>(r);
    return records_total[i] == 0
               ? 0.0
               : static_cast<double>(records_in_zero[i]) / static_cast<double>(records_total[i]);
  }
  std::size_t total_records() const {
    std::size_t n = 0;
    for (auto v : records_total) n += v;
    return n;
  }
  std::size_t total_in_zero() const {
    std::size_t n = 0;
    for (auto v : records_in_zero) n += v;
    return n;
  }
};

inline ZeroCountSummary zero_count_summary(const GeoTable& table,
                                           std::span<const PersonRecord> records) {
  ZeroCountSummary summary;
  for (const auto& rec : records) {
    if (!rec.true_race) {
      ++summary.missing_truth;
      continue;
    }
    auto it = table.counts.find(rec.geo_id);
    if (it == table.counts.end()) {
      ++summary.unresolved_geo;
      continue;
    }
    int r = static_cast<int>(*rec.true_race);
    ++summary.records_total[r];
    if (it->second[r] == 0.0) ++summary.records_in_zero[r];
  }
  return summary;
}

/// child_id -> parent_id rollup map, CSV header `child_id,parent_id`.
inline std::unordered_map<std::string, std::string> load_aggregation_map(const std::string& path) {
  CsvReader reader(path);
  std::vector<std::string> fields;
  if (!reader.next(fields)) throw std::runtime_error("aggregation map is empty: " + path);
  {
    std::string header;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) header.push_back(',');
      for (char c : fields[i]) header.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    if (header != "child_id,parent_id") {
      throw std::runtime_error("aggregation map has unexpected header: " + header);
    }
  }
  std::unordered_map<std::string, std::string> map;
  while (reader.next(fields)) {
    if (fields.size() == 1 && !fields[0].empty() && fields[0][0] == '#') continue;
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
      throw std::runtime_error("malformed aggregation map row in " + path);
    }
    auto [it, inserted] = map.try_emplace(fields[0], fields[1]);
    if (!inserted && it->second != fields[1]) {
      throw std::runtime_error("conflicting parents for child " + fields[0]);
    }
  }
  return map;
}

/// Rolls counts up to parent geographies. Children absent from the map keep
/// their own id, so a partial map coarsens only where it says to.
inline GeoTable aggregate(const GeoTable& table,
                          const std::unordered_map<std::string, std::string>& child_to_parent,
                          std::string level_label = "aggregated") {
  GeoTable out;
  out.level_label = std::move(level_label);
  for (const auto& [id, vec] : table.counts) {
    auto it = child_to_parent.find(id);
    const std::string& target = it == child_to_parent.end() ? id : it->second;
    auto [slot, inserted] = out.counts.try_emplace(target, vec);
    if (!inserted) slot->second += vec;
  }
  out.rebuild_totals();
  return out;
}

/// Applies the same rollup to record geo ids.
inline void aggregate_records(std::span<PersonRecord> records,
                              const std::unordered_map<std::string, std::string>& child_to_parent) {
  for (auto& rec : records) {
    auto it = child_to_parent.find(rec.geo_id);
    if (it != child_to_parent.end()) rec.geo_id = it->second;
  }
}

inline void save_geo_counts(const GeoTable& table, const std::string& path) {
  std::string out(kGeoHeader);
  out.push_back('\n');
  std::vector<const std::string*> ids;
  ids.reserve(table.counts.size());
  for (const auto& kv : table.counts) ids.push_back(&kv.first);
  std::sort(ids.begin(), ids.end(), [](const std::string* a, const std::string* b) { return *a < *b; });
  for (const std::string* id : ids) {
    const RaceVector& row = table.counts.at(*id);
    out += csv_escape(*id);
    for (int r = 0; r < kNumRaces; ++r) {
      out.push_back(',');
      out += format_double(row[r]);
    }
    out.push_back('\n');
  }
  write_file_bytes(path, out);
}

}  // namespace bisg
