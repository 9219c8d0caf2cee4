#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "bisg/geo.hpp"
#include "bisg/names.hpp"
#include "bisg/race.hpp"
#include "bisg/rng.hpp"

namespace bisg {

/// Row-stochastic race-by-race matrix: overlap[r][q] is the probability that
/// a name draw for a race-r person comes from race q's pool.
using OverlapMatrix = std::array<std::array<double, kNumRaces>, kNumRaces>;

inline OverlapMatrix identity_overlap() {
  OverlapMatrix m{};
  for (int r = 0; r < kNumRaces; ++r) m[static_cast<std::size_t>(r)][static_cast<std::size_t>(r)] = 1.0;
  return m;
}

/// Blends the identity with a uniform row: weight 0 keeps pools disjoint
/// (maximally informative names), weight 1 makes names carry no race signal.
inline OverlapMatrix uniform_overlap(double weight) {
  if (weight < 0.0 || weight > 1.0) throw std::invalid_argument("overlap weight must be in [0,1]");
  OverlapMatrix m{};
  for (int r = 0; r < kNumRaces; ++r) {
    for (int q = 0; q < kNumRaces; ++q) {
      double base = r == q ? 1.0 - weight : 0.0;
      m[static_cast<std::size_t>(r)][static_cast<std::size_t>(q)] = base + weight / kNumRaces;
    }
  }
  return m;
}

struct SynthConfig {
  int n_geographies = 100;
  /// Expected persons per geography; Poisson-distributed unless fixed.
  double population_mean = 50.0;
  bool poisson_population = true;
  /// Dirichlet concentration for the true per-geography race proportions.
  /// Zero entries pin that race's share to exactly zero.
  RaceVector dirichlet_concentration = RaceVector::counts(8.0, 4.0, 3.0, 2.0, 1.0);
  std::array<int, kNumRaces> surname_pool_sizes = {400, 400, 400, 400, 400};
  std::array<int, kNumRaces> first_pool_sizes = {150, 150, 150, 150, 150};
  std::array<int, kNumRaces> middle_pool_sizes = {150, 150, 150, 150, 150};
  OverlapMatrix surname_overlap = identity_overlap();
  OverlapMatrix first_overlap = identity_overlap();
  OverlapMatrix middle_overlap = identity_overlap();
  /// Census corruption: per-race probability that a geography's count for
  /// that race is replaced by zero, then binomial undercount thinning.
  std::array<double, kNumRaces> zero_out_rules = {0, 0, 0, 0, 0};
  double undercount_rate = 0.0;
  /// Dictionary censoring: per-race probability that a name whose dominant
  /// race is r is hidden from the public dictionary, plus a minimum-count
  /// threshold mirroring the census "at least 100 occurrences" rule.
  std::array<double, kNumRaces> hide_name_rules = {0, 0, 0, 0, 0};
  double hide_min_count = 0.0;
  std::uint64_t seed = 1;
  /// Optional violation of the name/geography independence assumption:
  /// rotates each cluster of geographies toward a different slice of the
  /// name pools.
  bool geo_name_correlation = false;
  int geo_clusters = 5;

  void validate() const {
    if (n_geographies <= 0) throw std::invalid_argument("n_geographies must be positive");
    if (population_mean < 0.0) throw std::invalid_argument("population_mean must be nonnegative");
    double conc_sum = 0.0;
    for (int r = 0; r < kNumRaces; ++r) {
      if (dirichlet_concentration[r] < 0.0) {
        throw std::invalid_argument("dirichlet_concentration entries must be nonnegative");
      }
      conc_sum += dirichlet_concentration[r];
    }
    if (!(conc_sum > 0.0)) throw std::invalid_argument("dirichlet_concentration must have mass");
    auto check_pools = [](const std::array<int, kNumRaces>& pools, const char* what) {
      for (int v : pools) {
        if (v <= 0) throw std::invalid_argument(std::string(what) + " pool sizes must be positive");
      }
    };
    check_pools(surname_pool_sizes, "surname");
    check_pools(first_pool_sizes, "first");
    check_pools(middle_pool_sizes, "middle");
    auto check_overlap = [](const OverlapMatrix& m, const char* what) {
      for (int r = 0; r < kNumRaces; ++r) {
        double row = 0.0;
        for (int q = 0; q < kNumRaces; ++q) {
          double v = m[static_cast<std::size_t>(r)][static_cast<std::size_t>(q)];
          if (v < 0.0) throw std::invalid_argument(std::string(what) + " overlap entries must be nonnegative");
          row += v;
        }
        if (std::abs(row - 1.0) > 1e-6) {
          throw std::invalid_argument(std::string(what) + " overlap rows must sum to 1");
        }
      }
    };
    check_overlap(surname_overlap, "surname");
    check_overlap(first_overlap, "first");
    check_overlap(middle_overlap, "middle");
    for (double v : zero_out_rules) {
      if (v < 0.0 || v > 1.0) throw std::invalid_argument("zero_out_rules must be in [0,1]");
    }
    for (double v : hide_name_rules) {
      if (v < 0.0 || v > 1.0) throw std::invalid_argument("hide_name_rules must be in [0,1]");
    }
    if (undercount_rate < 0.0 || undercount_rate >= 1.0) {
      throw std::invalid_argument("undercount_rate must be in [0,1)");
    }
    if (hide_min_count < 0.0) throw std::invalid_argument("hide_min_count must be nonnegative");
    if (geo_clusters <= 0) throw std::invalid_argument("geo_clusters must be positive");
  }
};

struct SynthOutput {
  std::vector<PersonRecord> records;
  GeoTable true_table;
  NameDictionary surname_dict;
  NameDictionary first_dict;
  NameDictionary middle_dict;
  std::vector<std::string> geo_ids;
  /// True per-geography race proportions, aligned with geo_ids.
  std::vector<RaceVector> zeta;
};

namespace detail {

inline constexpr std::uint64_t kCorruptSalt = 0xA5C3D1E2F4B60917ULL;
inline constexpr std::uint64_t kCensorSalt = 0x1F2E3D4C5B6A7988ULL;

/// Zipf-like name index sampler over one pool: P(k) proportional to 1/(k+1).
struct PoolSampler {
  std::vector<double> cumulative;

  explicit PoolSampler(int size) {
    cumulative.reserve(static_cast<std::size_t>(size));
    double acc = 0.0;
    for (int k = 0; k < size; ++k) {
      acc += 1.0 / static_cast<double>(k + 1);
      cumulative.push_back(acc);
    }
  }

  int draw(RandomStream& rng) const {
    double u = rng.uniform() * cumulative.back();
    auto it = std::lower_bound(cumulative.begin(), cumulative.end(), u);
    if (it == cumulative.end()) return static_cast<int>(cumulative.size()) - 1;
    return static_cast<int>(it - cumulative.begin());
  }
};

inline std::string base26(int value, int width) {
  std::string out(static_cast<std::size_t>(width), 'A');
  for (int pos = width - 1; pos >= 0 && value > 0; --pos) {
    out[static_cast<std::size_t>(pos)] = static_cast<char>('A' + value % 26);
    value /= 26;
  }
  return out;
}

/// Synthetic name: field tag + pool race letter + base-26 index, e.g.
/// surname 17 of the Hispanic pool is "LNCAAR". Keys are A-Z only so they
/// survive normalize_name unchanged.
inline std::string pool_name(NameField field, int pool_race, int index) {
  const char* tag = field == NameField::Surname ? "LN" : field == NameField::First ? "FN" : "MN";
  std::string out(tag);
  out.push_back(static_cast<char>('A' + pool_race));
  out += base26(index, 4);
  return out;
}

inline int draw_overlap_race(RandomStream& rng, const OverlapMatrix& overlap, int race) {
  const auto& row = overlap[static_cast<std::size_t>(race)];
  double total = 0.0;
  for (double v : row) total += v;
  return rng.categorical(row.data(), kNumRaces, total);
}

}  // namespace detail

/// Draws the synthetic population. Per geography: true proportions from the
/// Dirichlet, a Poisson (or fixed) person count, races i.i.d. from the
/// proportions, and names from race-specific pools routed through the
/// overlap matrices. The true GeoTable tallies generated persons exactly.
/// Deterministic given the seed; geographies use independent derived
/// streams.
inline SynthOutput generate_population(const SynthConfig& config) {
  config.validate();
  SynthOutput out;
  out.true_table.level_label = "synthetic";
  out.geo_ids.reserve(static_cast<std::size_t>(config.n_geographies));
  out.zeta.reserve(static_cast<std::size_t>(config.n_geographies));

  std::array<std::vector<detail::PoolSampler>, 3> samplers;
  for (int r = 0; r < kNumRaces; ++r) {
    samplers[0].emplace_back(config.surname_pool_sizes[static_cast<std::size_t>(r)]);
    samplers[1].emplace_back(config.first_pool_sizes[static_cast<std::size_t>(r)]);
    samplers[2].emplace_back(config.middle_pool_sizes[static_cast<std::size_t>(r)]);
  }
  const std::array<const OverlapMatrix*, 3> overlaps = {&config.surname_overlap,
                                                        &config.first_overlap,
                                                        &config.middle_overlap};
  const std::array<NameField, 3> fields = {NameField::Surname, NameField::First,
                                           NameField::Middle};
  const std::array<const std::array<int, kNumRaces>*, 3> pool_sizes = {
      &config.surname_pool_sizes, &config.first_pool_sizes, &config.middle_pool_sizes};

  std::size_t next_record = 0;
  char buf[32];
  for (int g = 0; g < config.n_geographies; ++g) {
    std::snprintf(buf, sizeof buf, "G%06d", g);
    std::string geo_id(buf);
    RandomStream rng(derive_stream_seed(config.seed, geo_id));

    RaceVector zeta = RaceVector::zeros(VectorKind::Probability);
    {
      double gamma_draws[kNumRaces];
      double total = 0.0;
      for (int r = 0; r < kNumRaces; ++r) {
        double a = config.dirichlet_concentration[r];
        gamma_draws[r] = a > 0.0 ? rng.gamma(a) : 0.0;
        total += gamma_draws[r];
      }
      if (!(total > 0.0)) {
        // Degenerate gamma underflow: fall back to the normalized concentration.
        double conc_total = config.dirichlet_concentration.sum();
        for (int r = 0; r < kNumRaces; ++r) zeta[r] = config.dirichlet_concentration[r] / conc_total;
      } else {
        for (int r = 0; r < kNumRaces; ++r) zeta[r] = gamma_draws[r] / total;
      }
    }

    long n_persons = config.poisson_population
                         ? rng.poisson(config.population_mean)
                         : static_cast<long>(std::llround(config.population_mean));
    RaceVector geo_counts = RaceVector::zeros();
    const int cluster = config.geo_name_correlation ? g % config.geo_clusters : 0;

    for (long p = 0; p < n_persons; ++p) {
      int race = rng.categorical(zeta.values.data(), kNumRaces, zeta.sum());
      geo_counts[race] += 1.0;

      PersonRecord rec;
      std::snprintf(buf, sizeof buf, "R%08zu", next_record++);
      rec.record_id = buf;
      rec.geo_id = geo_id;
      rec.true_race = static_cast<Race>(race);

      for (int f = 0; f < 3; ++f) {
        int pool_race = detail::draw_overlap_race(rng, *overlaps[static_cast<std::size_t>(f)], race);
        int size = (*pool_sizes[static_cast<std::size_t>(f)])[static_cast<std::size_t>(pool_race)];
        int index = samplers[static_cast<std::size_t>(f)][static_cast<std::size_t>(pool_race)].draw(rng);
        if (config.geo_name_correlation && config.geo_clusters > 1) {
          int stride = std::max(size / config.geo_clusters, 1);
          index = (index + cluster * stride) % size;
        }
        std::string name = detail::pool_name(fields[static_cast<std::size_t>(f)], pool_race, index);
        if (f == 0) rec.surname_key = std::move(name);
        else if (f == 1) rec.first_key = std::move(name);
        else rec.middle_key = std::move(name);
      }
      out.records.push_back(std::move(rec));
    }
    out.true_table.counts.emplace(geo_id, geo_counts);
    out.geo_ids.push_back(std::move(geo_id));
    out.zeta.push_back(zeta);
  }
  out.true_table.rebuild_totals();

  if (!out.records.empty()) {
    out.surname_dict = build_dictionary(out.records, NameField::Surname);
    out.first_dict = build_dictionary(out.records, NameField::First);
    out.middle_dict = build_dictionary(out.records, NameField::Middle);
  } else {
    out.surname_dict.field_kind = NameField::Surname;
    out.first_dict.field_kind = NameField::First;
    out.middle_dict.field_kind = NameField::Middle;
  }
  return out;
}

/// Injects census measurement error: per (geography, race), the count is
/// zeroed with zero_out_rules[race] probability, then binomially thinned at
/// undercount_rate. Counts never increase. Per-geography derived streams
/// keep the result independent of map iteration order.
inline GeoTable corrupt_census(const GeoTable& true_table, const SynthConfig& config) {
  config.validate();
  GeoTable out;
  out.level_label = true_table.level_label;
  out.counts.reserve(true_table.counts.size());
  for (const auto& [geo_id, counts] : true_table.counts) {
    RandomStream rng(derive_stream_seed(config.seed ^ detail::kCorruptSalt, geo_id));
    RaceVector observed = RaceVector::zeros();
    for (int r = 0; r < kNumRaces; ++r) {
      bool zeroed = rng.uniform() < config.zero_out_rules[static_cast<std::size_t>(r)];
      double kept = zeroed ? 0.0 : counts[r];
      if (config.undercount_rate > 0.0 && kept > 0.0) {
        kept = static_cast<double>(
            rng.binomial(static_cast<long>(kept), 1.0 - config.undercount_rate));
      }
      observed[r] = kept;
    }
    out.counts.emplace(geo_id, observed);
  }
  out.rebuild_totals();
  return out;
}

struct CensorReport {
  RaceVector removed_mass = RaceVector::zeros();
  RaceVector kept_mass = RaceVector::zeros();
  std::size_t removed_keys = 0;
  std::size_t kept_keys = 0;

  double removed_share(Race r) const {
    double total = removed_mass[r] + kept_mass[r];
    return total > 0.0 ? removed_mass[r] / total : 0.0;
  }
};

struct CensoredDictionary {
  NameDictionary dict;
  CensorReport report;
};

/// Produces the under-coverage pathology: drops names below the count
/// threshold, then hides surviving names with the per-race probability keyed
/// to the name's dominant race. Per-key derived streams make censoring a
/// deterministic function of (seed, key).
inline CensoredDictionary censor_dictionary(const NameDictionary& full,
                                            const SynthConfig& config) {
  config.validate();
  CensoredDictionary out;
  out.dict.field_kind = full.field_kind;
  out.dict.sources = full.sources;
  out.dict.national_prior = full.national_prior;
  out.dict.explicit_national_prior = full.explicit_national_prior;
  for (const auto& [key, counts] : full.counts) {
    bool removed = false;
    if (counts.sum() < config.hide_min_count) {
      removed = true;
    } else {
      int dominant = 0;
      for (int r = 1; r < kNumRaces; ++r) {
        if (counts[r] > counts[dominant]) dominant = r;
      }
      double p_hide = config.hide_name_rules[static_cast<std::size_t>(dominant)];
      if (p_hide > 0.0) {
        RandomStream rng(derive_stream_seed(config.seed ^ detail::kCensorSalt, key));
        removed = rng.uniform() < p_hide;
      }
    }
    if (removed) {
      out.report.removed_mass += counts;
      ++out.report.removed_keys;
    } else {
      out.report.kept_mass += counts;
      ++out.report.kept_keys;
      out.dict.counts.emplace(key, counts);
    }
  }
  out.dict.rebuild_conditionals();
  return out;
}

}  // namespace bisg
