#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "bisg/csv.hpp"
#include "bisg/geo.hpp"
#include "bisg/names.hpp"
#include "bisg/race.hpp"
#include "bisg/rng.hpp"

namespace bisg {

enum class PredictionMethod { Bisg, Fbisg };

inline std::string_view to_string(PredictionMethod m) {
  return m == PredictionMethod::Bisg ? "bisg" : "fbisg";
}

struct PosteriorPrediction {
  std::string record_id;
  RaceVector probs = RaceVector::zeros(VectorKind::Probability);
  PredictionMethod method = PredictionMethod::Bisg;
  bool surname_matched = false;
  bool first_matched = false;
  bool middle_matched = false;
  Race map_race = Race::White;
  bool map_tied = false;
  /// Set when some zero name-table cell forced a factor to be dropped.
  bool degenerate = false;
};

/// Argmax with ties broken by the fixed category order; sets map_tied.
inline Race map_classify(const RaceVector& probs, bool* tied = nullptr) {
  int best = 0;
  for (int r = 1; r < kNumRaces; ++r) {
    if (probs[r] > probs[best]) best = r;
  }
  if (tied != nullptr) {
    *tied = false;
    for (int r = 0; r < kNumRaces; ++r) {
      if (r != best && probs[r] == probs[best]) {
        *tied = true;
        break;
      }
    }
  }
  return static_cast<Race>(best);
}

inline void apply_map_classification(PosteriorPrediction& pred) {
  pred.map_race = map_classify(pred.probs, &pred.map_tied);
}

namespace detail {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kShareFloor = 1e-12;

/// Per-record name likelihood factors in log space (-inf marks exact zeros).
/// The surname slot already contains the unmatched-name fallback
/// national_prior[r] / max(geo_aggregate_share[r], 1e-12) when the surname
/// misses the dictionary; first/middle slots are flat (all zero) when the
/// field is absent, unmatched, or excluded.
struct NameFactors {
  std::array<double, kNumRaces> log_surname{};
  std::array<double, kNumRaces> log_first{};
  std::array<double, kNumRaces> log_middle{};
  bool surname_matched = false;
  bool first_matched = false;
  bool middle_matched = false;

  /// Sum of factor logs at a drop level. Level 0 keeps everything; each
  /// further level drops one more factor in the order middle, first, last.
  double log_at(int r, int drop_level) const {
    double v = 0.0;
    if (drop_level < 3) v += log_surname[static_cast<std::size_t>(r)];
    if (drop_level < 2) v += log_first[static_cast<std::size_t>(r)];
    if (drop_level < 1) v += log_middle[static_cast<std::size_t>(r)];
    return v;
  }
};

inline double safe_log(double v) { return v > 0.0 ? std::log(v) : kNegInf; }

inline NameFactors compute_name_factors(const PersonRecord& rec, const DictionarySet& dicts,
                                        const RaceVector& geo_aggregate_shares,
                                        NameFieldSet fields) {
  NameFactors f;
  if (dicts.surname) {
    NameLookup lu = lookup(*dicts.surname, rec.surname_key, LookupDirection::NameGivenRace);
    f.surname_matched = lu.matched;
    if (lu.matched) {
      for (int r = 0; r < kNumRaces; ++r) f.log_surname[static_cast<std::size_t>(r)] = safe_log(lu.vec[r]);
    } else {
      const RaceVector& prior = dicts.surname->national_prior;
      for (int r = 0; r < kNumRaces; ++r) {
        double share = std::max(geo_aggregate_shares[r], kShareFloor);
        f.log_surname[static_cast<std::size_t>(r)] = safe_log(prior[r] / share);
      }
    }
  }
  if (uses_first(fields) && dicts.first) {
    NameLookup lu = lookup(*dicts.first, rec.first_key, LookupDirection::NameGivenRace);
    if (lu.matched) {
      f.first_matched = true;
      for (int r = 0; r < kNumRaces; ++r) f.log_first[static_cast<std::size_t>(r)] = safe_log(lu.vec[r]);
    }
  }
  if (uses_middle(fields) && dicts.middle) {
    NameLookup lu = lookup(*dicts.middle, rec.middle_key, LookupDirection::NameGivenRace);
    if (lu.matched) {
      f.middle_matched = true;
      for (int r = 0; r < kNumRaces; ++r) f.log_middle[static_cast<std::size_t>(r)] = safe_log(lu.vec[r]);
    }
  }
  return f;
}

/// Smallest drop level whose factor product is positive for some race with
/// base[r] > 0. base is the geographic prior for BISG and the (always
/// positive) count term for the Gibbs conditional.
inline int resolve_drop_level(const NameFactors& f, const RaceVector& base) {
  for (int level = 0; level < 3; ++level) {
    for (int r = 0; r < kNumRaces; ++r) {
      if (base[r] > 0.0 && f.log_at(r, level) != kNegInf) return level;
    }
  }
  return 3;
}

/// Normalized softmax-style product base[r] * exp(log_f[r]) with max-shift.
inline RaceVector normalize_product(const NameFactors& f, int drop_level, const RaceVector& base) {
  std::array<double, kNumRaces> lw;
  double max_lw = kNegInf;
  for (int r = 0; r < kNumRaces; ++r) {
    double lb = safe_log(base[r]);
    lw[static_cast<std::size_t>(r)] = lb == kNegInf ? kNegInf : lb + f.log_at(r, drop_level);
    max_lw = std::max(max_lw, lw[static_cast<std::size_t>(r)]);
  }
  RaceVector out = RaceVector::zeros(VectorKind::Probability);
  if (max_lw == kNegInf) {
    throw std::domain_error("posterior normalizer is zero even after dropping all name factors");
  }
  double total = 0.0;
  for (int r = 0; r < kNumRaces; ++r) {
    double v = lw[static_cast<std::size_t>(r)] == kNegInf ? 0.0
                                                          : std::exp(lw[static_cast<std::size_t>(r)] - max_lw);
    out[r] = v;
    total += v;
  }
  for (int r = 0; r < kNumRaces; ++r) out[r] /= total;
  return out;
}

}  // namespace detail

/// Naive Bayes posterior P(R | names, G): the product of the geographic
/// prior with the included name likelihood factors. Zeros in the geographic
/// prior survive exactly. When every race is killed by a zero name factor,
/// factors drop in the order middle, first, last and the record is flagged
/// degenerate.
inline PosteriorPrediction bisg_posterior(const PersonRecord& rec, const DictionarySet& dicts,
                                          const GeoTable& geo_table, NameFieldSet fields) {
  RaceVector prior = p_race_given_geo(geo_table, rec.geo_id);
  detail::NameFactors f =
      detail::compute_name_factors(rec, dicts, geo_table.aggregate_shares(), fields);
  int level = detail::resolve_drop_level(f, prior);
  PosteriorPrediction pred;
  pred.record_id = rec.record_id;
  pred.method = PredictionMethod::Bisg;
  pred.surname_matched = f.surname_matched;
  pred.first_matched = f.first_matched;
  pred.middle_matched = f.middle_matched;
  pred.degenerate = level > 0;
  pred.probs = detail::normalize_product(f, level, prior);
  apply_map_classification(pred);
  return pred;
}

struct GibbsConditional {
  RaceVector probs = RaceVector::zeros(VectorKind::Probability);
  bool degenerate = false;
};

/// Full conditional for one record's label: name factors times the count
/// term (n^{-i}_rg + N_rg + alpha_r). With alpha positive the count term is
/// positive for every race, so a race is zeroed only by its name factors.
inline GibbsConditional gibbs_conditional(const PersonRecord& rec, const DictionarySet& dicts,
                                          const RaceVector& n_minus_i, const RaceVector& census_counts,
                                          const RaceVector& alpha,
                                          const RaceVector& geo_aggregate_shares,
                                          NameFieldSet fields) {
  if (!alpha.all_positive()) throw std::invalid_argument("gibbs_conditional: alpha must be positive");
  detail::NameFactors f = detail::compute_name_factors(rec, dicts, geo_aggregate_shares, fields);
  RaceVector count_term = RaceVector::zeros();
  for (int r = 0; r < kNumRaces; ++r) count_term[r] = n_minus_i[r] + census_counts[r] + alpha[r];
  int level = detail::resolve_drop_level(f, count_term);
  GibbsConditional out;
  out.degenerate = level > 0;
  out.probs = detail::normalize_product(f, level, count_term);
  return out;
}

struct InferenceRun {
  std::vector<PosteriorPrediction> predictions;
  /// record_ids whose geo_id is not in the table (BISG additionally excludes
  /// zero-population geographies); excluded from inference, never imputed.
  std::vector<std::string> excluded_records;
  std::size_t degenerate_count = 0;
};

/// Batch BISG over records, preserving input order. Records in unknown or
/// zero-population geographies are reported in excluded_records.
inline InferenceRun run_bisg(std::span<const PersonRecord> records, const DictionarySet& dicts,
                             const GeoTable& geo_table, NameFieldSet fields = NameFieldSet::Last) {
  InferenceRun run;
  run.predictions.reserve(records.size());
  RaceVector shares = geo_table.aggregate_shares();
  for (const auto& rec : records) {
    auto it = geo_table.counts.find(rec.geo_id);
    if (it == geo_table.counts.end() || !(it->second.sum() > 0.0)) {
      run.excluded_records.push_back(rec.record_id);
      continue;
    }
    detail::NameFactors f = detail::compute_name_factors(rec, dicts, shares, fields);
    RaceVector prior = it->second.normalized();
    int level = detail::resolve_drop_level(f, prior);
    PosteriorPrediction pred;
    pred.record_id = rec.record_id;
    pred.method = PredictionMethod::Bisg;
    pred.surname_matched = f.surname_matched;
    pred.first_matched = f.first_matched;
    pred.middle_matched = f.middle_matched;
    pred.degenerate = level > 0;
    pred.probs = detail::normalize_product(f, level, prior);
    apply_map_classification(pred);
    if (pred.degenerate) ++run.degenerate_count;
    run.predictions.push_back(std::move(pred));
  }
  return run;
}

/// Collapsed Gibbs sampler state, exposed for invariant checks and tests.
/// Indices refer to the in-sample record sequence (input order, exclusions
/// removed).
struct GibbsState {
  std::vector<Race> labels;
  std::unordered_map<std::string, RaceVector> n_counts;
  std::uint64_t master_seed = 0;
  int iteration = 0;
  std::vector<RaceVector> tallies;
};

namespace detail {

struct GeoGroup {
  std::string geo_id;
  RaceVector census = RaceVector::zeros();
  std::vector<std::uint32_t> record_idx;
};

struct PreparedRecord {
  // Linear-space factors at the resolved drop level, max-shifted per record.
  std::array<double, kNumRaces> factor{};
  bool surname_matched = false;
  bool first_matched = false;
  bool middle_matched = false;
  bool degenerate = false;
};

inline PreparedRecord prepare_record(const PersonRecord& rec, const DictionarySet& dicts,
                                     const RaceVector& shares, NameFieldSet fields) {
  NameFactors f = compute_name_factors(rec, dicts, shares, fields);
  // The Gibbs count term is positive everywhere, so positivity of the
  // conditional depends on the name factors alone and the drop level is a
  // static per-record property.
  int level = resolve_drop_level(f, RaceVector::ones());
  PreparedRecord out;
  out.surname_matched = f.surname_matched;
  out.first_matched = f.first_matched;
  out.middle_matched = f.middle_matched;
  out.degenerate = level > 0;
  double max_lf = kNegInf;
  std::array<double, kNumRaces> lf;
  for (int r = 0; r < kNumRaces; ++r) {
    lf[static_cast<std::size_t>(r)] = f.log_at(r, level);
    max_lf = std::max(max_lf, lf[static_cast<std::size_t>(r)]);
  }
  for (int r = 0; r < kNumRaces; ++r) {
    double lv = lf[static_cast<std::size_t>(r)];
    out.factor[static_cast<std::size_t>(r)] = lv == kNegInf ? 0.0 : std::exp(lv - max_lf);
  }
  return out;
}

/// Runs the chain for one geography. All mutable state lives in caller-owned
/// arrays indexed by record slot, so concurrent groups never touch the same
/// memory.
inline void run_geo_chain(const GeoGroup& group, std::span<const PreparedRecord> prepared,
                          const SamplerConfig& config, std::span<Race> labels,
                          std::span<RaceVector> tallies, RaceVector& n_out) {
  RandomStream rng(derive_stream_seed(config.seed, group.geo_id));
  const RaceVector& census = group.census;
  const RaceVector& alpha = config.alpha;
  const bool rao_blackwell = config.posterior_estimator == PosteriorEstimator::RaoBlackwell;

  RaceVector n = RaceVector::zeros();
  bool geo_has_population = census.sum() > 0.0;
  RaceVector prior = geo_has_population ? census.normalized() : RaceVector::zeros();

  for (std::uint32_t idx : group.record_idx) {
    const PreparedRecord& p = prepared[idx];
    // Initial labels come from BISG predictions. In zero-population
    // geographies BISG is undefined; the (N_rg + alpha_r) count term stands
    // in for the prior there.
    double w[kNumRaces];
    double total = 0.0;
    for (int r = 0; r < kNumRaces; ++r) {
      double base = geo_has_population ? prior[r] : census[r] + alpha[r];
      w[r] = p.factor[static_cast<std::size_t>(r)] * base;
      total += w[r];
    }
    Race label;
    if (!(total > 0.0)) {
      // Name factors vanish exactly where the prior lives; level resolution
      // guarantees the count term still works.
      for (int r = 0; r < kNumRaces; ++r) {
        w[r] = p.factor[static_cast<std::size_t>(r)] * (census[r] + alpha[r]);
        total += w[r];
      }
    }
    if (config.initialization == GibbsInit::Sampled) {
      label = static_cast<Race>(rng.categorical(w, kNumRaces, total));
    } else {
      int best = 0;
      for (int r = 1; r < kNumRaces; ++r) {
        if (w[r] > w[best]) best = r;
      }
      label = static_cast<Race>(best);
    }
    labels[idx] = label;
    n[label] += 1.0;
  }

  for (int sweep = 1; sweep <= config.iterations_total; ++sweep) {
    const bool record_samples = sweep > config.burn_in;
    for (std::uint32_t idx : group.record_idx) {
      const PreparedRecord& p = prepared[idx];
      n[labels[idx]] -= 1.0;
      double w[kNumRaces];
      double total = 0.0;
      for (int r = 0; r < kNumRaces; ++r) {
        w[r] = p.factor[static_cast<std::size_t>(r)] * (n[r] + census[r] + alpha[r]);
        total += w[r];
      }
      if (record_samples && rao_blackwell) {
        for (int r = 0; r < kNumRaces; ++r) tallies[idx][r] += w[r] / total;
      }
      Race drawn = static_cast<Race>(rng.categorical(w, kNumRaces, total));
      n[drawn] += 1.0;
      labels[idx] = drawn;
      if (record_samples && !rao_blackwell) tallies[idx][drawn] += 1.0;
    }
    if (config.check_invariants) {
      RaceVector recount = RaceVector::zeros();
      for (std::uint32_t idx : group.record_idx) recount[labels[idx]] += 1.0;
      for (int r = 0; r < kNumRaces; ++r) {
        if (recount[r] != n[r]) {
          throw std::logic_error("gibbs count-consistency violated in geo " + group.geo_id);
        }
      }
    }
  }
  n_out = n;
}

}  // namespace detail

struct FbisgRun {
  InferenceRun run;
  GibbsState state;
};

/// Collapsed Gibbs sampler for the measurement-error model. The posterior
/// factorizes over geographies, so each geography runs as an independent
/// chain with its own seed derived from (master seed, geo_id); partitions
/// only schedule geography groups onto threads and cannot change results.
inline FbisgRun run_fbisg_with_state(std::span<const PersonRecord> records,
                                     const DictionarySet& dicts, const GeoTable& geo_table,
                                     const SamplerConfig& config) {
  config.validate();
  FbisgRun out;
  out.state.master_seed = config.seed;

  RaceVector shares = geo_table.aggregate_shares();

  // In-sample records and their geography groups, both in input order.
  std::vector<std::uint32_t> sample_to_input;
  std::vector<detail::GeoGroup> groups;
  std::unordered_map<std::string, std::size_t> group_of;
  std::vector<detail::PreparedRecord> prepared;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const PersonRecord& rec = records[i];
    auto it = geo_table.counts.find(rec.geo_id);
    if (it == geo_table.counts.end()) {
      out.run.excluded_records.push_back(rec.record_id);
      continue;
    }
    auto [git, inserted] = group_of.try_emplace(rec.geo_id, groups.size());
    if (inserted) {
      groups.push_back({rec.geo_id, it->second, {}});
    }
    groups[git->second].record_idx.push_back(static_cast<std::uint32_t>(sample_to_input.size()));
    prepared.push_back(detail::prepare_record(rec, dicts, shares, config.name_fields));
    sample_to_input.push_back(static_cast<std::uint32_t>(i));
  }

  const std::size_t n_sample = sample_to_input.size();
  out.state.labels.assign(n_sample, Race::White);
  out.state.tallies.assign(n_sample, RaceVector::zeros());
  std::vector<RaceVector> group_n(groups.size(), RaceVector::zeros());

  auto run_groups = [&](std::size_t begin_group, std::size_t stride) {
    for (std::size_t gi = begin_group; gi < groups.size(); gi += stride) {
      detail::run_geo_chain(groups[gi], prepared, config, out.state.labels, out.state.tallies,
                            group_n[gi]);
    }
  };

  const std::size_t n_workers =
      std::min<std::size_t>(static_cast<std::size_t>(config.parallel_partitions), std::max<std::size_t>(groups.size(), 1));
  if (n_workers <= 1) {
    run_groups(0, 1);
  } else {
    std::vector<std::thread> workers;
    workers.reserve(n_workers);
    for (std::size_t wi = 0; wi < n_workers; ++wi) {
      workers.emplace_back(run_groups, wi, n_workers);
    }
    for (auto& t : workers) t.join();
  }

  out.state.iteration = config.iterations_total;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    out.state.n_counts.emplace(groups[gi].geo_id, group_n[gi]);
  }

  const double kept = static_cast<double>(config.iterations_total - config.burn_in);
  out.run.predictions.reserve(n_sample);
  for (std::size_t si = 0; si < n_sample; ++si) {
    const PersonRecord& rec = records[sample_to_input[si]];
    const detail::PreparedRecord& p = prepared[si];
    PosteriorPrediction pred;
    pred.record_id = rec.record_id;
    pred.method = PredictionMethod::Fbisg;
    pred.surname_matched = p.surname_matched;
    pred.first_matched = p.first_matched;
    pred.middle_matched = p.middle_matched;
    pred.degenerate = p.degenerate;
    for (int r = 0; r < kNumRaces; ++r) pred.probs[r] = out.state.tallies[si][r] / kept;
    pred.probs = pred.probs.normalized();
    pred.probs.kind = VectorKind::Probability;
    apply_map_classification(pred);
    if (pred.degenerate) ++out.run.degenerate_count;
    out.run.predictions.push_back(std::move(pred));
  }
  return out;
}

inline InferenceRun run_fbisg(std::span<const PersonRecord> records, const DictionarySet& dicts,
                              const GeoTable& geo_table, const SamplerConfig& config) {
  return run_fbisg_with_state(records, dicts, geo_table, config).run;
}

inline constexpr std::string_view kPredictionsHeader =
    "record_id,method,p_white,p_black,p_hispanic,p_asian,p_other,map_race,map_tied,"
    "surname_matched,first_matched,middle_matched,degenerate";

inline void save_predictions(std::span<const PosteriorPrediction> preds, std::string& out) {
  out += kPredictionsHeader;
  out.push_back('\n');
  for (const auto& p : preds) {
    out += csv_escape(p.record_id);
    out.push_back(',');
    out += to_string(p.method);
    for (int r = 0; r < kNumRaces; ++r) {
      out.push_back(',');
      out += format_double(p.probs[r]);
    }
    out.push_back(',');
    out += to_string(p.map_race);
    out.push_back(',');
    out += p.map_tied ? '1' : '0';
    out.push_back(',');
    out += p.surname_matched ? '1' : '0';
    out.push_back(',');
    out += p.first_matched ? '1' : '0';
    out.push_back(',');
    out += p.middle_matched ? '1' : '0';
    out.push_back(',');
    out += p.degenerate ? '1' : '0';
    out.push_back('\n');
  }
}

inline void save_predictions_csv(std::span<const PosteriorPrediction> preds,
                                 const std::string& path) {
  std::string out;
  save_predictions(preds, out);
  write_file_bytes(path, out);
}

inline std::vector<PosteriorPrediction> load_predictions_csv(const std::string& path) {
  CsvReader reader(path);
  std::vector<std::string> fields;
  if (!reader.next(fields)) throw std::runtime_error("predictions file is empty: " + path);
  {
    std::string header;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) header.push_back(',');
      header += detail::lower_ascii(fields[i]);
    }
    if (header != kPredictionsHeader) {
      throw std::runtime_error("predictions file has unexpected header: " + header);
    }
  }
  auto parse_bool = [](std::string_view s) {
    return s == "1" || s == "true" || s == "TRUE" || s == "True";
  };
  std::vector<PosteriorPrediction> preds;
  while (reader.next(fields)) {
    if (fields.size() == 1 && !fields[0].empty() && fields[0][0] == '#') continue;
    if (fields.size() != 13) throw std::runtime_error("malformed predictions row in " + path);
    PosteriorPrediction p;
    p.record_id = fields[0];
    if (fields[1] == "fbisg") p.method = PredictionMethod::Fbisg;
    else if (fields[1] == "bisg") p.method = PredictionMethod::Bisg;
    else throw std::runtime_error("unknown prediction method: " + fields[1]);
    for (int r = 0; r < kNumRaces; ++r) {
      double v = 0.0;
      if (!parse_double(fields[static_cast<std::size_t>(2 + r)], v)) {
        throw std::runtime_error("malformed probability in " + path);
      }
      p.probs[r] = v;
    }
    p.probs.kind = VectorKind::Probability;
    auto race = parse_race(fields[7]);
    if (!race) throw std::runtime_error("unknown map_race in " + path);
    p.map_race = *race;
    p.map_tied = parse_bool(fields[8]);
    p.surname_matched = parse_bool(fields[9]);
    p.first_matched = parse_bool(fields[10]);
    p.middle_matched = parse_bool(fields[11]);
    p.degenerate = parse_bool(fields[12]);
    preds.push_back(std::move(p));
  }
  return preds;
}

}  // namespace bisg
