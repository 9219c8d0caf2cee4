#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "bisg/csv.hpp"
#include "bisg/race.hpp"

namespace bisg {

/// Normalized name key: uppercase A-Z only, possibly empty.
using NameKey = std::string;

namespace detail {

// Latin Extended-A (U+0100..U+017F) base letters, indexed by cp - 0x100.
// '1' marks the IJ digraph, '2' the OE digraph.
inline constexpr char kLatinExtA[129] =
    "AAAAAA"          // 0100-0105 A with macron/breve/ogonek
    "CCCCCCCC"        // 0106-010D
    "DDDD"            // 010E-0111
    "EEEEEEEEEE"      // 0112-011B
    "GGGGGGGG"        // 011C-0123
    "HHHH"            // 0124-0127
    "IIIIIIIIII"      // 0128-0131
    "11"              // 0132-0133 IJ
    "JJ"              // 0134-0135
    "KKK"             // 0136-0138
    "LLLLLLLLLL"      // 0139-0142
    "NNNNNNNNN"       // 0143-014B (incl. eng)
    "OOOOOO"          // 014C-0151
    "22"              // 0152-0153 OE
    "RRRRRR"          // 0154-0159
    "SSSSSSSS"        // 015A-0161
    "TTTTTT"          // 0162-0167
    "UUUUUUUUUUUU"    // 0168-0173
    "WW"              // 0174-0175
    "YYY"             // 0176-0178
    "ZZZZZZ"          // 0179-017E
    "S";              // 017F long s

/// Appends the ASCII folding of one codepoint; non-letters and scripts with
/// no ASCII base letter are dropped.
inline void fold_codepoint(std::uint32_t cp, std::string& out) {
  if (cp >= 'A' && cp <= 'Z') {
    out.push_back(static_cast<char>(cp));
    return;
  }
  if (cp >= 'a' && cp <= 'z') {
    out.push_back(static_cast<char>(cp - 'a' + 'A'));
    return;
  }
  if (cp >= 0xC0 && cp <= 0xFF) {
    std::uint32_t u = cp < 0xE0 ? cp : (cp == 0xFF ? 0xFF : cp - 0x20);  // uppercase the block
    switch (u) {
      case 0xC6: out += "AE"; return;                 // AE ligature
      case 0xDE: out += "TH"; return;                 // thorn
      case 0xDF: out += "SS"; return;                 // sharp s (stays lowercase in Unicode)
      case 0xD7: case 0xF7: return;                   // multiplication/division signs
      case 0xFF: out.push_back('Y'); return;          // y with diaeresis
      default: break;
    }
    static constexpr char latin1[] = "AAAAAA?CEEEEIIIIDNOOOOO?OUUUUY??";
    char c = latin1[u - 0xC0];
    if (c != '?') out.push_back(c);
    return;
  }
  if (cp >= 0x100 && cp <= 0x17F) {
    char c = kLatinExtA[cp - 0x100];
    if (c == '1') out += "IJ";
    else if (c == '2') out += "OE";
    else out.push_back(c);
    return;
  }
  // Everything else (digits, punctuation, spaces, non-Latin scripts): dropped.
}

}  // namespace detail

/// Cleans a raw name into a key: uppercase, diacritics folded to ASCII base
/// letters, everything that is not a letter removed. Invalid UTF-8 bytes are
/// dropped. Deterministic and idempotent; may return the empty key.
inline NameKey normalize_name(std::string_view raw) {
  NameKey out;
  out.reserve(raw.size());
  std::size_t i = 0;
  while (i < raw.size()) {
    unsigned char b0 = static_cast<unsigned char>(raw[i]);
    std::uint32_t cp = 0;
    std::size_t len = 0;
    if (b0 < 0x80) {
      cp = b0;
      len = 1;
    } else if ((b0 >> 5) == 0x6 && i + 1 < raw.size() &&
               (static_cast<unsigned char>(raw[i + 1]) >> 6) == 0x2) {
      cp = (static_cast<std::uint32_t>(b0 & 0x1F) << 6) |
           (static_cast<unsigned char>(raw[i + 1]) & 0x3F);
      len = 2;
    } else if ((b0 >> 4) == 0xE && i + 2 < raw.size() &&
               (static_cast<unsigned char>(raw[i + 1]) >> 6) == 0x2 &&
               (static_cast<unsigned char>(raw[i + 2]) >> 6) == 0x2) {
      cp = (static_cast<std::uint32_t>(b0 & 0x0F) << 12) |
           ((static_cast<unsigned char>(raw[i + 1]) & 0x3F) << 6) |
           (static_cast<unsigned char>(raw[i + 2]) & 0x3F);
      len = 3;
    } else if ((b0 >> 3) == 0x1E && i + 3 < raw.size() &&
               (static_cast<unsigned char>(raw[i + 1]) >> 6) == 0x2 &&
               (static_cast<unsigned char>(raw[i + 2]) >> 6) == 0x2 &&
               (static_cast<unsigned char>(raw[i + 3]) >> 6) == 0x2) {
      cp = (static_cast<std::uint32_t>(b0 & 0x07) << 18) |
           ((static_cast<unsigned char>(raw[i + 1]) & 0x3F) << 12) |
           ((static_cast<unsigned char>(raw[i + 2]) & 0x3F) << 6) |
           (static_cast<unsigned char>(raw[i + 3]) & 0x3F);
      len = 4;
    } else {
      i += 1;  // invalid byte
      continue;
    }
    detail::fold_codepoint(cp, out);
    i += len;
  }
  return out;
}

enum class NameField { Surname, First, Middle };

inline std::string_view to_string(NameField f) {
  switch (f) {
    case NameField::Surname: return "surname";
    case NameField::First: return "first";
    case NameField::Middle: return "middle";
  }
  return "?";
}

/// Per-field name-race table. `counts` holds the m_sr table (real-valued:
/// census rows contribute count * P(r|name) pseudo-counts); the two
/// conditionals are derived from it by row/column normalization and are kept
/// mutually consistent by rebuild_conditionals().
struct NameDictionary {
  NameField field_kind = NameField::Surname;
  std::unordered_map<NameKey, RaceVector> counts;
  std::unordered_map<NameKey, RaceVector> p_name_given_race;
  std::unordered_map<NameKey, RaceVector> p_race_given_name;
  /// Fallback P(race) for keys absent from the dictionary.
  RaceVector national_prior = RaceVector::uniform_probability();
  /// Set when the prior came from external totals (census cross-tabs) rather
  /// than from this dictionary's own column sums; survives merges.
  bool explicit_national_prior = false;
  std::vector<std::string> sources;
  double total_count = 0.0;

  bool contains(const NameKey& key) const { return counts.find(key) != counts.end(); }
  std::size_t size() const { return counts.size(); }

  void rebuild_conditionals() {
    p_name_given_race.clear();
    p_race_given_name.clear();
    RaceVector column_totals = RaceVector::zeros();
    total_count = 0.0;
    for (auto it = counts.begin(); it != counts.end();) {
      double row = it->second.sum();
      if (!(row > 0.0)) {
        it = counts.erase(it);  // zero rows carry no information
        continue;
      }
      column_totals += it->second;
      total_count += row;
      ++it;
    }
    p_name_given_race.reserve(counts.size());
    p_race_given_name.reserve(counts.size());
    for (const auto& [key, row] : counts) {
      p_race_given_name.emplace(key, row.normalized());
      RaceVector col = RaceVector::zeros(VectorKind::Count);
      for (int r = 0; r < kNumRaces; ++r) {
        col[r] = column_totals[r] > 0.0 ? row[r] / column_totals[r] : 0.0;
      }
      p_name_given_race.emplace(key, col);
    }
    if (!explicit_national_prior && column_totals.sum() > 0.0) {
      national_prior = column_totals.normalized();
    }
  }
};

/// One (name, field, race) observation for dictionary building.
struct DictionaryEntry {
  NameKey key;
  NameField field;
  Race race;
};

/// Builds the empirical m_sr table from labeled observations. All entries
/// must share one field kind. Middle-name single initials are dropped: a
/// one-letter key carries no usable signal and would pollute the table.
inline NameDictionary build_dictionary(std::span<const DictionaryEntry> entries) {
  if (entries.empty()) throw std::invalid_argument("build_dictionary: no labeled entries");
  NameDictionary dict;
  dict.field_kind = entries.front().field;
  for (const auto& e : entries) {
    if (e.field != dict.field_kind) {
      throw std::invalid_argument("build_dictionary: mixed name field kinds");
    }
    if (e.key.empty()) continue;
    if (dict.field_kind == NameField::Middle && e.key.size() == 1) continue;
    auto [it, inserted] = dict.counts.try_emplace(e.key, RaceVector::zeros());
    it->second[e.race] += 1.0;
  }
  dict.rebuild_conditionals();
  return dict;
}

/// Builds a dictionary for one name field from labeled person records.
/// Every record must carry a true race.
inline NameDictionary build_dictionary(std::span<const PersonRecord> records, NameField field) {
  if (records.empty()) throw std::invalid_argument("build_dictionary: no labeled records");
  std::vector<DictionaryEntry> entries;
  entries.reserve(records.size());
  for (const auto& rec : records) {
    if (!rec.true_race) {
      throw std::invalid_argument("build_dictionary: record without true race: " + rec.record_id);
    }
    const std::string& key = field == NameField::Surname  ? rec.surname_key
                             : field == NameField::First ? rec.first_key
                                                         : rec.middle_key;
    entries.push_back({key, field, *rec.true_race});
  }
  NameDictionary dict = build_dictionary(entries);
  dict.field_kind = field;
  return dict;
}

struct MergeWeights {
  double base = 1.0;
  double augment = 1.0;
};

/// Cell-wise weighted addition of two count tables of the same field kind.
/// Associative on counts; the empty dictionary is the identity.
inline NameDictionary merge_dictionaries(const NameDictionary& base, const NameDictionary& augment,
                                         MergeWeights weights = {}) {
  if (base.field_kind != augment.field_kind) {
    throw std::invalid_argument("merge_dictionaries: field kind mismatch");
  }
  NameDictionary out;
  out.field_kind = base.field_kind;
  out.counts = base.counts;
  if (weights.base != 1.0) {
    for (auto& [key, row] : out.counts) {
      for (int r = 0; r < kNumRaces; ++r) row[r] *= weights.base;
    }
  }
  for (const auto& [key, row] : augment.counts) {
    auto [it, inserted] = out.counts.try_emplace(key, RaceVector::zeros());
    for (int r = 0; r < kNumRaces; ++r) it->second[r] += weights.augment * row[r];
  }
  out.sources = base.sources;
  out.sources.insert(out.sources.end(), augment.sources.begin(), augment.sources.end());
  if (base.explicit_national_prior) {
    out.national_prior = base.national_prior;
    out.explicit_national_prior = true;
  } else if (augment.explicit_national_prior) {
    out.national_prior = augment.national_prior;
    out.explicit_national_prior = true;
  }
  out.rebuild_conditionals();
  return out;
}

enum class LookupDirection { RaceGivenName, NameGivenRace };

struct NameLookup {
  RaceVector vec;
  bool matched = false;
};

/// Dictionary lookup with the unmatched-name fallback. Unmatched keys (empty,
/// absent, or one-letter middle initials) return the national prior with
/// matched=false; for the NameGivenRace direction the caller is responsible
/// for converting that race-given-name fallback into a likelihood factor.
inline NameLookup lookup(const NameDictionary& dict, const NameKey& key,
                         LookupDirection direction) {
  bool unmatched = key.empty() || (dict.field_kind == NameField::Middle && key.size() == 1);
  if (!unmatched) {
    const auto& table =
        direction == LookupDirection::RaceGivenName ? dict.p_race_given_name : dict.p_name_given_race;
    auto it = table.find(key);
    if (it != table.end()) return {it->second, true};
  }
  return {dict.national_prior, false};
}

struct CsvLoadReport {
  std::size_t rows_loaded = 0;
  std::size_t rows_skipped = 0;
  std::size_t rows_flagged = 0;
  std::size_t duplicates = 0;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::string lower_ascii(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

inline bool is_suppressed_cell(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s == "(S)" || s == "(s)";
}

}  // namespace detail

struct CensusSurnameResult {
  NameDictionary dict;
  CsvLoadReport report;
};

inline constexpr std::string_view kCensusSurnameHeader =
    "name,rank,count,prop100k,cum_prop100k,pctwhite,pctblack,pctapi,pctaian,pct2prace,pcthispanic";

/// Ingests the 2010 Census frequently-occurring-surnames CSV layout.
///
/// Race mapping: White<-pctwhite, Black<-pctblack, Asian<-pctapi,
/// Hispanic<-pcthispanic, Other<-pctaian+pct2prace. Suppressed "(S)" cells:
/// the remainder to 100 of the reported percentages is split equally among
/// the categories with a suppressed source column (clamped at 0 when the
/// reported cells already exceed 100), then the row is renormalized. Rows
/// whose percentages sum outside [95,105] before renormalization are flagged.
///
/// The per-name pseudo-count table is count * P(r|name), so P(name|race)
/// comes out as count*P(r|name) / sum_names count*P(r|name). The national
/// prior is taken from the supplied national census totals.
inline CensusSurnameResult load_census_surname_file(const std::string& path,
                                                    const RaceVector& national_counts) {
  if (!(national_counts.sum() > 0.0)) {
    throw std::invalid_argument("load_census_surname_file: national counts must be positive");
  }
  CsvReader reader(path);
  std::vector<std::string> fields;
  if (!reader.next(fields)) {
    throw std::runtime_error("census surname file is empty: " + path);
  }
  {
    std::string header;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) header.push_back(',');
      header += detail::lower_ascii(fields[i]);
    }
    if (header != kCensusSurnameHeader) {
      throw std::runtime_error("census surname file has unexpected header: " + header);
    }
  }

  CensusSurnameResult result;
  result.dict.field_kind = NameField::Surname;
  result.dict.sources.push_back(path);
  result.dict.national_prior = national_counts.normalized();
  result.dict.explicit_national_prior = true;

  // Source pct columns feeding each of the five categories.
  // Column indices: 5 pctwhite, 6 pctblack, 7 pctapi, 8 pctaian, 9 pct2prace, 10 pcthispanic.
  static constexpr int kSourceCols[kNumRaces][2] = {{5, -1}, {6, -1}, {10, -1}, {7, -1}, {8, 9}};

  while (reader.next(fields)) {
    if (fields.size() == 1 && !fields[0].empty() && fields[0][0] == '#') continue;
    if (fields.size() != 11) {
      ++result.report.rows_skipped;
      continue;
    }
    NameKey key = normalize_name(fields[0]);
    long long count = 0;
    if (key.empty() || !parse_long(fields[2], count) || count < 0) {
      ++result.report.rows_skipped;
      continue;
    }

    double known[kNumRaces] = {0, 0, 0, 0, 0};
    bool suppressed[kNumRaces] = {false, false, false, false, false};
    int n_suppressed = 0;
    bool parse_ok = true;
    for (int r = 0; r < kNumRaces && parse_ok; ++r) {
      bool any_suppressed = false;
      for (int c : kSourceCols[r]) {
        if (c < 0) continue;
        if (detail::is_suppressed_cell(fields[static_cast<std::size_t>(c)])) {
          any_suppressed = true;
          continue;
        }
        double v = 0.0;
        if (!parse_double(fields[static_cast<std::size_t>(c)], v) || v < 0.0) {
          parse_ok = false;
          break;
        }
        known[r] += v;
      }
      if (any_suppressed) {
        suppressed[r] = true;
        ++n_suppressed;
      }
    }
    if (!parse_ok) {
      ++result.report.rows_skipped;
      continue;
    }

    double known_total = 0.0;
    for (double v : known) known_total += v;
    double pct[kNumRaces];
    double share = 0.0;
    if (n_suppressed > 0) {
      share = std::max(100.0 - known_total, 0.0) / n_suppressed;
    }
    double raw_sum = 0.0;
    for (int r = 0; r < kNumRaces; ++r) {
      pct[r] = known[r] + (suppressed[r] ? share : 0.0);
      raw_sum += pct[r];
    }
    if (raw_sum < 95.0 || raw_sum > 105.0) {
      ++result.report.rows_flagged;
      result.report.warnings.push_back("percentages for " + key + " sum to " +
                                       format_double(raw_sum));
    }
    if (!(raw_sum > 0.0)) {
      ++result.report.rows_skipped;
      continue;
    }

    auto [it, inserted] = result.dict.counts.try_emplace(key, RaceVector::zeros());
    if (!inserted) ++result.report.duplicates;
    for (int r = 0; r < kNumRaces; ++r) {
      it->second[r] += static_cast<double>(count) * (pct[r] / raw_sum);
    }
    ++result.report.rows_loaded;
  }

  if (result.report.rows_loaded == 0) {
    result.report.warnings.push_back("census surname file has no data rows: " + path);
  }
  result.dict.rebuild_conditionals();
  // rebuild_conditionals keeps an explicit prior; re-assert for clarity.
  result.dict.national_prior = national_counts.normalized();
  return result;
}

/// Census Spanish surname list: `name[,count]` rows (an optional header line
/// is tolerated). Each row contributes P(Hispanic|name)=1 pseudo-counts with
/// weight = its count when present, else default_weight.
inline CensusSurnameResult load_spanish_surname_list(const std::string& path,
                                                     double default_weight = 100.0) {
  CsvReader reader(path);
  CensusSurnameResult result;
  result.dict.field_kind = NameField::Surname;
  result.dict.sources.push_back(path);
  std::vector<std::string> fields;
  bool first_row = true;
  while (reader.next(fields)) {
    if (fields.size() == 1 && !fields[0].empty() && fields[0][0] == '#') continue;
    if (first_row) {
      first_row = false;
      if (detail::lower_ascii(fields[0]) == "name") continue;  // header line
    }
    NameKey key = normalize_name(fields[0]);
    if (key.empty()) {
      ++result.report.rows_skipped;
      continue;
    }
    double weight = default_weight;
    if (fields.size() >= 2 && !fields[1].empty()) {
      if (!parse_double(fields[1], weight) || weight < 0.0) {
        ++result.report.rows_skipped;
        continue;
      }
    }
    auto [it, inserted] = result.dict.counts.try_emplace(key, RaceVector::zeros());
    if (!inserted) ++result.report.duplicates;
    it->second[Race::Hispanic] += weight;
    ++result.report.rows_loaded;
  }
  result.dict.rebuild_conditionals();
  return result;
}

inline constexpr std::string_view kDictionaryHeader =
    "key,count_white,count_black,count_hispanic,count_asian,count_other";

/// Writes a dictionary as the versioned count CSV. Keys are sorted so the
/// output is byte-stable.
inline void save_dictionary_csv(const NameDictionary& dict, const std::string& path) {
  std::string out;
  out += "#bisg-dictionary version=1 field=";
  out += to_string(dict.field_kind);
  if (dict.explicit_national_prior) {
    out += " national_prior=";
    for (int r = 0; r < kNumRaces; ++r) {
      if (r) out.push_back(';');
      out += format_double(dict.national_prior[r]);
    }
  }
  out.push_back('\n');
  out += kDictionaryHeader;
  out.push_back('\n');
  std::vector<const NameKey*> keys;
  keys.reserve(dict.counts.size());
  for (const auto& kv : dict.counts) keys.push_back(&kv.first);
  std::sort(keys.begin(), keys.end(), [](const NameKey* a, const NameKey* b) { return *a < *b; });
  for (const NameKey* key : keys) {
    const RaceVector& row = dict.counts.at(*key);
    out += *key;
    for (int r = 0; r < kNumRaces; ++r) {
      out.push_back(',');
      out += format_double(row[r]);
    }
    out.push_back('\n');
  }
  write_file_bytes(path, out);
}

inline NameDictionary load_dictionary_csv(const std::string& path, NameField expected_field) {
  CsvReader reader(path);
  NameDictionary dict;
  dict.field_kind = expected_field;
  dict.sources.push_back(path);
  std::vector<std::string> fields;
  bool header_seen = false;
  while (reader.next(fields)) {
    if (fields.size() == 1 && !fields[0].empty() && fields[0][0] == '#') {
      // Version/metadata comment: "#bisg-dictionary version=1 field=... national_prior=a;b;c;d;e"
      std::string_view line = fields[0];
      auto field_pos = line.find("field=");
      if (field_pos != std::string_view::npos) {
        auto rest = line.substr(field_pos + 6);
        auto end = rest.find(' ');
        auto name = rest.substr(0, end);
        NameField parsed = name == "first"    ? NameField::First
                           : name == "middle" ? NameField::Middle
                                              : NameField::Surname;
        if (parsed != expected_field) {
          throw std::runtime_error("dictionary field kind mismatch in " + path);
        }
      }
      auto prior_pos = line.find("national_prior=");
      if (prior_pos != std::string_view::npos) {
        auto rest = std::string(line.substr(prior_pos + 15));
        RaceVector prior = RaceVector::zeros(VectorKind::Probability);
        std::size_t start = 0;
        for (int r = 0; r < kNumRaces; ++r) {
          auto sep = rest.find(';', start);
          std::string tok = rest.substr(start, sep == std::string::npos ? sep : sep - start);
          auto sp = tok.find(' ');
          if (sp != std::string::npos) tok = tok.substr(0, sp);
          double v = 0.0;
          if (!parse_double(tok, v)) throw std::runtime_error("bad national_prior in " + path);
          prior[r] = v;
          if (sep == std::string::npos) break;
          start = sep + 1;
        }
        dict.national_prior = prior;
        dict.explicit_national_prior = true;
      }
      continue;
    }
    if (!header_seen) {
      std::string header;
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) header.push_back(',');
        header += detail::lower_ascii(fields[i]);
      }
      if (header != kDictionaryHeader) {
        throw std::runtime_error("dictionary file has unexpected header: " + path);
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != 6) throw std::runtime_error("malformed dictionary row in " + path);
    RaceVector row = RaceVector::zeros();
    for (int r = 0; r < kNumRaces; ++r) {
      double v = 0.0;
      if (!parse_double(fields[static_cast<std::size_t>(r + 1)], v) || v < 0.0) {
        throw std::runtime_error("malformed dictionary count in " + path);
      }
      row[r] = v;
    }
    dict.counts[fields[0]] = row;
  }
  if (!header_seen) throw std::runtime_error("dictionary file missing header: " + path);
  dict.rebuild_conditionals();
  return dict;
}

/// The dictionaries one prediction run works from. census_surname is the
/// unaugmented census table (coverage scheme 1); surname is what inference
/// uses (typically census merged with voter-file counts).
struct DictionarySet {
  std::shared_ptr<const NameDictionary> census_surname;
  std::shared_ptr<const NameDictionary> surname;
  std::shared_ptr<const NameDictionary> first;
  std::shared_ptr<const NameDictionary> middle;
};

enum class CoverageScheme { CensusLast, AugmentedLast, LastFirst, LastFirstMiddle };

inline std::string_view to_string(CoverageScheme s) {
  switch (s) {
    case CoverageScheme::CensusLast: return "census_last";
    case CoverageScheme::AugmentedLast: return "augmented_last";
    case CoverageScheme::LastFirst: return "last_first";
    case CoverageScheme::LastFirstMiddle: return "last_first_middle";
  }
  return "?";
}

struct CoverageReport {
  std::array<std::size_t, kNumRaces> total{};
  std::array<std::size_t, kNumRaces> unmatched{};
  std::size_t skipped_no_truth = 0;

  double unmatched_share(Race r) const {
    int i = static_cast<int>(r);
    return total[i] == 0 ? 0.0 : static_cast<double>(unmatched[i]) / static_cast<double>(total[i]);
  }
};

namespace detail {

inline bool key_matches(const NameDictionary* dict, const NameKey& key) {
  if (dict == nullptr || key.empty()) return false;
  if (dict->field_kind == NameField::Middle && key.size() == 1) return false;
  return dict->contains(key);
}

}  // namespace detail

/// Per-race fraction of records that match no dictionary under the given
/// scheme. A record counts as matched when any included name field matches.
inline CoverageReport coverage_report(const DictionarySet& dicts,
                                      std::span<const PersonRecord> records,
                                      CoverageScheme scheme) {
  CoverageReport report;
  const NameDictionary* surname = scheme == CoverageScheme::CensusLast
                                      ? dicts.census_surname.get()
                                      : dicts.surname.get();
  const NameDictionary* first =
      (scheme == CoverageScheme::LastFirst || scheme == CoverageScheme::LastFirstMiddle)
          ? dicts.first.get()
          : nullptr;
  const NameDictionary* middle =
      scheme == CoverageScheme::LastFirstMiddle ? dicts.middle.get() : nullptr;
  for (const auto& rec : records) {
    if (!rec.true_race) {
      ++report.skipped_no_truth;
      continue;
    }
    int r = static_cast<int>(*rec.true_race);
    ++report.total[r];
    bool matched = detail::key_matches(surname, rec.surname_key) ||
                   detail::key_matches(first, rec.first_key) ||
                   detail::key_matches(middle, rec.middle_key);
    if (!matched) ++report.unmatched[r];
  }
  return report;
}

/// Labeled-records CSV: header `record_id,last,first,middle,geo_id,race`.
/// Raw names are normalized on ingestion; empty fields are allowed. Rows
/// whose race label is nonempty but unrecognized are counted and the label
/// dropped.
struct RecordsLoadResult {
  std::vector<PersonRecord> records;
  std::size_t rows_skipped = 0;
  std::size_t unknown_race_labels = 0;
};

inline constexpr std::string_view kRecordsHeader = "record_id,last,first,middle,geo_id,race";

inline RecordsLoadResult load_labeled_records(const std::string& path) {
  CsvReader reader(path);
  std::vector<std::string> fields;
  if (!reader.next(fields)) throw std::runtime_error("records file is empty: " + path);
  {
    std::string header;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) header.push_back(',');
      header += detail::lower_ascii(fields[i]);
    }
    if (header != kRecordsHeader) {
      throw std::runtime_error("records file has unexpected header: " + header);
    }
  }
  RecordsLoadResult result;
  while (reader.next(fields)) {
    if (fields.size() == 1 && !fields[0].empty() && fields[0][0] == '#') continue;
    if (fields.size() != 6 || fields[0].empty()) {
      ++result.rows_skipped;
      continue;
    }
    PersonRecord rec;
    rec.record_id = fields[0];
    rec.surname_key = normalize_name(fields[1]);
    rec.first_key = normalize_name(fields[2]);
    rec.middle_key = normalize_name(fields[3]);
    rec.geo_id = fields[4];
    if (!fields[5].empty()) {
      rec.true_race = parse_race(fields[5]);
      if (!rec.true_race) ++result.unknown_race_labels;
    }
    result.records.push_back(std::move(rec));
  }
  return result;
}

inline void save_labeled_records(std::span<const PersonRecord> records, const std::string& path) {
  std::string out(kRecordsHeader);
  out.push_back('\n');
  for (const auto& rec : records) {
    out += csv_escape(rec.record_id);
    out.push_back(',');
    out += rec.surname_key;
    out.push_back(',');
    out += rec.first_key;
    out.push_back(',');
    out += rec.middle_key;
    out.push_back(',');
    out += csv_escape(rec.geo_id);
    out.push_back(',');
    if (rec.true_race) out += to_string(*rec.true_race);
    out.push_back('\n');
  }
  write_file_bytes(path, out);
}

}  // namespace bisg
