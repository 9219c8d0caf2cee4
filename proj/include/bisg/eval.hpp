#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "bisg/csv.hpp"
#include "bisg/geo.hpp"
#include "bisg/inference.hpp"
#include "bisg/race.hpp"

#include "json.hpp"

namespace bisg {

/// One-vs-rest AUROC via rank sums with average ranks over ties, so tied
/// pairs count 1/2. O(n log n); equals the pairwise definition exactly.
inline double auroc(std::span<const double> scores, std::span<const unsigned char> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("auroc: size mismatch");
  std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (unsigned char l : labels) n_pos += l ? 1 : 0;
  std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw std::invalid_argument("auroc: needs at least one positive and one negative label");
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // 1-based ranks i+1..j share the average rank.
    double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]]) rank_sum_pos += avg_rank;
    }
    i = j;
  }
  double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

struct CalibrationPoint {
  double mean_predicted = 0.0;
  double observed_share = 0.0;
  std::size_t count = 0;
};

/// Reliability-diagram points: equal-width bins on [0,1], empty bins
/// omitted, a score of exactly 1 lands in the last bin.
inline std::vector<CalibrationPoint> calibration_curve(std::span<const double> scores,
                                                       std::span<const unsigned char> labels,
                                                       int bins = 10) {
  if (bins < 2) throw std::invalid_argument("calibration_curve: bins must be >= 2");
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("calibration_curve: size mismatch");
  }
  std::vector<double> sum_pred(static_cast<std::size_t>(bins), 0.0);
  std::vector<std::size_t> n_bin(static_cast<std::size_t>(bins), 0);
  std::vector<std::size_t> n_pos(static_cast<std::size_t>(bins), 0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    double s = scores[i];
    int b = static_cast<int>(s * bins);
    b = std::clamp(b, 0, bins - 1);
    sum_pred[static_cast<std::size_t>(b)] += s;
    n_bin[static_cast<std::size_t>(b)] += 1;
    if (labels[i]) n_pos[static_cast<std::size_t>(b)] += 1;
  }
  std::vector<CalibrationPoint> points;
  for (int b = 0; b < bins; ++b) {
    auto bi = static_cast<std::size_t>(b);
    if (n_bin[bi] == 0) continue;
    points.push_back({sum_pred[bi] / static_cast<double>(n_bin[bi]),
                      static_cast<double>(n_pos[bi]) / static_cast<double>(n_bin[bi]), n_bin[bi]});
  }
  return points;
}

/// MAP classification rates. fnr[r] = #{true r, MAP != r} / #{true r};
/// fpr[r] = #{true != r, MAP = r} / #{true != r}. Rates with an empty
/// denominator are omitted rather than reported as 0/0.
struct ErrorTable {
  std::array<std::array<std::size_t, kNumRaces>, kNumRaces> confusion{};  // [true][predicted]
  std::array<std::optional<double>, kNumRaces> fnr;
  std::array<std::optional<double>, kNumRaces> fpr;
  std::optional<double> overall_error;
  std::size_t n = 0;
};

inline ErrorTable error_table(std::span<const Race> predicted, std::span<const Race> truth) {
  if (predicted.size() != truth.size()) throw std::invalid_argument("error_table: size mismatch");
  ErrorTable table;
  table.n = predicted.size();
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    int t = static_cast<int>(truth[i]);
    int p = static_cast<int>(predicted[i]);
    table.confusion[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)] += 1;
    if (t != p) ++wrong;
  }
  if (table.n > 0) table.overall_error = static_cast<double>(wrong) / static_cast<double>(table.n);
  for (int r = 0; r < kNumRaces; ++r) {
    auto ri = static_cast<std::size_t>(r);
    std::size_t n_true = 0, fn = 0, n_other = 0, fp = 0;
    for (int p = 0; p < kNumRaces; ++p) {
      n_true += table.confusion[ri][static_cast<std::size_t>(p)];
      if (p != r) fn += table.confusion[ri][static_cast<std::size_t>(p)];
    }
    for (int t = 0; t < kNumRaces; ++t) {
      if (t == r) continue;
      for (int p = 0; p < kNumRaces; ++p) {
        n_other += table.confusion[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
      }
      fp += table.confusion[static_cast<std::size_t>(t)][ri];
    }
    if (n_true > 0) table.fnr[ri] = static_cast<double>(fn) / static_cast<double>(n_true);
    if (n_other > 0) table.fpr[ri] = static_cast<double>(fp) / static_cast<double>(n_other);
  }
  return table;
}

enum class StrataKind { None, ZeroCount, NameMatch };

inline std::string_view to_string(StrataKind s) {
  switch (s) {
    case StrataKind::None: return "none";
    case StrataKind::ZeroCount: return "zero_count";
    case StrataKind::NameMatch: return "name_match";
  }
  return "?";
}

inline std::optional<StrataKind> parse_strata(std::string_view s) {
  if (s == "none") return StrataKind::None;
  if (s == "zero_count") return StrataKind::ZeroCount;
  if (s == "name_match") return StrataKind::NameMatch;
  return std::nullopt;
}

/// Metrics for one stratum. Under zero_count strata the per-race metrics for
/// race r condition on whether the record's geography reports zero members
/// of race r, and the overall error conditions on the record's own true
/// race; under name_match everything conditions on the surname-match flag.
struct StratumMetrics {
  std::string label;
  std::size_t n_records = 0;
  std::optional<double> overall_error;
  std::array<std::optional<double>, kNumRaces> auroc;
  std::array<std::optional<double>, kNumRaces> fnr;
  std::array<std::optional<double>, kNumRaces> fpr;
  std::array<std::size_t, kNumRaces> n_positive{};
  std::array<std::size_t, kNumRaces> n_negative{};
};

struct EvalReport {
  StrataKind strata = StrataKind::None;
  /// First block is always the unstratified "all"; stratified blocks follow.
  std::vector<StratumMetrics> blocks;
  std::array<std::vector<CalibrationPoint>, kNumRaces> calibration;
  int calibration_bins = 10;
};

namespace detail {

/// Joined view of one prediction and its ground truth.
struct ScoredRecord {
  const PosteriorPrediction* pred;
  Race truth;
  const RaceVector* geo_counts;  // null when no geo table supplied
};

inline StratumMetrics stratum_metrics(const std::vector<ScoredRecord>& rows, std::string label,
                                      StrataKind strata, bool zero_side) {
  StratumMetrics m;
  m.label = std::move(label);
  const bool stratified = strata != StrataKind::None;

  auto in_overall = [&](const ScoredRecord& row) {
    if (!stratified) return true;
    if (strata == StrataKind::NameMatch) return row.pred->surname_matched != zero_side;
    bool zero = (*row.geo_counts)[row.truth] == 0.0;
    return zero == zero_side;
  };
  auto in_race = [&](const ScoredRecord& row, int r) {
    if (!stratified) return true;
    if (strata == StrataKind::NameMatch) return row.pred->surname_matched != zero_side;
    bool zero = (*row.geo_counts)[r] == 0.0;
    return zero == zero_side;
  };

  std::size_t wrong = 0;
  for (const auto& row : rows) {
    if (!in_overall(row)) continue;
    ++m.n_records;
    if (row.pred->map_race != row.truth) ++wrong;
  }
  if (m.n_records > 0) {
    m.overall_error = static_cast<double>(wrong) / static_cast<double>(m.n_records);
  }

  std::vector<double> scores;
  std::vector<unsigned char> labels;
  for (int r = 0; r < kNumRaces; ++r) {
    auto ri = static_cast<std::size_t>(r);
    scores.clear();
    labels.clear();
    std::size_t fn = 0, fp = 0;
    for (const auto& row : rows) {
      if (!in_race(row, r)) continue;
      bool is_pos = static_cast<int>(row.truth) == r;
      scores.push_back(row.pred->probs[r]);
      labels.push_back(is_pos ? 1 : 0);
      if (is_pos) {
        ++m.n_positive[ri];
        if (row.pred->map_race != row.truth) ++fn;
      } else {
        ++m.n_negative[ri];
        if (static_cast<int>(row.pred->map_race) == r) ++fp;
      }
    }
    if (m.n_positive[ri] > 0) {
      m.fnr[ri] = static_cast<double>(fn) / static_cast<double>(m.n_positive[ri]);
    }
    if (m.n_negative[ri] > 0) {
      m.fpr[ri] = static_cast<double>(fp) / static_cast<double>(m.n_negative[ri]);
    }
    if (m.n_positive[ri] > 0 && m.n_negative[ri] > 0) {
      m.auroc[ri] = auroc(scores, labels);
    }
  }
  return m;
}

}  // namespace detail

/// Full evaluation of one prediction set against labeled records. The
/// records supply ground truth (every scored prediction must resolve to a
/// labeled record); geo_table is required for zero_count strata.
inline EvalReport evaluate(std::span<const PosteriorPrediction> preds,
                           std::span<const PersonRecord> records, const GeoTable* geo_table,
                           StrataKind strata = StrataKind::None, int calibration_bins = 10) {
  if (strata == StrataKind::ZeroCount && geo_table == nullptr) {
    throw std::invalid_argument("evaluate: zero_count strata need a geo table");
  }
  std::unordered_map<std::string_view, const PersonRecord*> by_id;
  by_id.reserve(records.size());
  for (const auto& rec : records) by_id.emplace(rec.record_id, &rec);

  std::vector<detail::ScoredRecord> rows;
  rows.reserve(preds.size());
  for (const auto& pred : preds) {
    auto it = by_id.find(pred.record_id);
    if (it == by_id.end()) {
      throw std::runtime_error("evaluate: prediction for unknown record " + pred.record_id);
    }
    const PersonRecord& rec = *it->second;
    if (!rec.true_race) {
      throw std::runtime_error("evaluate: record without true race: " + rec.record_id);
    }
    const RaceVector* counts = nullptr;
    if (geo_table != nullptr) {
      auto git = geo_table->counts.find(rec.geo_id);
      if (git == geo_table->counts.end()) {
        throw std::runtime_error("evaluate: record in unknown geography: " + rec.record_id);
      }
      counts = &git->second;
    }
    rows.push_back({&pred, *rec.true_race, counts});
  }

  EvalReport report;
  report.strata = strata;
  report.calibration_bins = calibration_bins;
  report.blocks.push_back(detail::stratum_metrics(rows, "all", StrataKind::None, false));
  if (strata == StrataKind::ZeroCount) {
    report.blocks.push_back(detail::stratum_metrics(rows, "zero_count", strata, true));
    report.blocks.push_back(detail::stratum_metrics(rows, "nonzero_count", strata, false));
  } else if (strata == StrataKind::NameMatch) {
    report.blocks.push_back(detail::stratum_metrics(rows, "name_unmatched", strata, true));
    report.blocks.push_back(detail::stratum_metrics(rows, "name_matched", strata, false));
  }

  std::vector<double> scores(rows.size());
  std::vector<unsigned char> labels(rows.size());
  for (int r = 0; r < kNumRaces; ++r) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      scores[i] = rows[i].pred->probs[r];
      labels[i] = static_cast<int>(rows[i].truth) == r ? 1 : 0;
    }
    report.calibration[static_cast<std::size_t>(r)] =
        calibration_curve(scores, labels, calibration_bins);
  }
  return report;
}

inline nlohmann::json eval_report_to_json(const EvalReport& report) {
  nlohmann::json j;
  j["strata"] = std::string(to_string(report.strata));
  j["calibration_bins"] = report.calibration_bins;
  nlohmann::json blocks = nlohmann::json::object();
  for (const auto& block : report.blocks) {
    nlohmann::json b;
    b["n_records"] = block.n_records;
    if (block.overall_error) b["overall_error"] = *block.overall_error;
    nlohmann::json races = nlohmann::json::object();
    for (int r = 0; r < kNumRaces; ++r) {
      auto ri = static_cast<std::size_t>(r);
      nlohmann::json m;
      m["n_positive"] = block.n_positive[ri];
      m["n_negative"] = block.n_negative[ri];
      if (block.auroc[ri]) m["auroc"] = *block.auroc[ri];
      if (block.fnr[ri]) m["fnr"] = *block.fnr[ri];
      if (block.fpr[ri]) m["fpr"] = *block.fpr[ri];
      races[std::string(kRaceNames[ri])] = std::move(m);
    }
    b["races"] = std::move(races);
    blocks[block.label] = std::move(b);
  }
  j["blocks"] = std::move(blocks);
  nlohmann::json cal = nlohmann::json::object();
  for (int r = 0; r < kNumRaces; ++r) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : report.calibration[static_cast<std::size_t>(r)]) {
      points.push_back({{"mean_predicted", p.mean_predicted},
                        {"observed_share", p.observed_share},
                        {"count", p.count}});
    }
    cal[std::string(kRaceNames[static_cast<std::size_t>(r)])] = std::move(points);
  }
  j["calibration"] = std::move(cal);
  return j;
}

/// Flat metrics rows: `stratum,race,metric,value`. Overall rows use race
/// "all". Undefined rates are simply absent.
inline std::string eval_report_to_csv(const EvalReport& report) {
  std::string out = "stratum,race,metric,value\n";
  auto emit = [&out](std::string_view stratum, std::string_view race, std::string_view metric,
                     double value) {
    out += stratum;
    out.push_back(',');
    out += race;
    out.push_back(',');
    out += metric;
    out.push_back(',');
    out += format_double(value);
    out.push_back('\n');
  };
  for (const auto& block : report.blocks) {
    emit(block.label, "all", "n_records", static_cast<double>(block.n_records));
    if (block.overall_error) emit(block.label, "all", "overall_error", *block.overall_error);
    for (int r = 0; r < kNumRaces; ++r) {
      auto ri = static_cast<std::size_t>(r);
      std::string_view race = kRaceNames[ri];
      emit(block.label, race, "n_positive", static_cast<double>(block.n_positive[ri]));
      if (block.auroc[ri]) emit(block.label, race, "auroc", *block.auroc[ri]);
      if (block.fnr[ri]) emit(block.label, race, "fnr", *block.fnr[ri]);
      if (block.fpr[ri]) emit(block.label, race, "fpr", *block.fpr[ri]);
    }
  }
  return out;
}

/// Calibration points as CSV for external plotting:
/// `race,mean_predicted,observed_share,count`.
inline std::string calibration_to_csv(const EvalReport& report) {
  std::string out = "race,mean_predicted,observed_share,count\n";
  for (int r = 0; r < kNumRaces; ++r) {
    for (const auto& p : report.calibration[static_cast<std::size_t>(r)]) {
      out += kRaceNames[static_cast<std::size_t>(r)];
      out.push_back(',');
      out += format_double(p.mean_predicted);
      out.push_back(',');
      out += format_double(p.observed_share);
      out.push_back(',');
      out += std::to_string(p.count);
      out.push_back('\n');
    }
  }
  return out;
}

}  // namespace bisg
