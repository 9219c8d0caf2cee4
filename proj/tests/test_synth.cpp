#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <unordered_map>
#include <vector>

#include "bisg/geo.hpp"
#include "bisg/synth.hpp"

using namespace bisg;

TEST_CASE("generation is deterministic in the seed") {
  SynthConfig config;
  config.n_geographies = 12;
  config.population_mean = 40;
  config.seed = 321;

  auto a = generate_population(config);
  auto b = generate_population(config);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].record_id == b.records[i].record_id);
    CHECK(a.records[i].surname_key == b.records[i].surname_key);
    CHECK(a.records[i].geo_id == b.records[i].geo_id);
    CHECK(a.records[i].true_race == b.records[i].true_race);
  }
  REQUIRE(a.zeta.size() == b.zeta.size());
  for (std::size_t g = 0; g < a.zeta.size(); ++g) CHECK(a.zeta[g] == b.zeta[g]);

  config.seed = 322;
  auto c = generate_population(config);
  bool any_difference = a.records.size() != c.records.size();
  for (std::size_t i = 0; !any_difference && i < a.records.size(); ++i) {
    any_difference = a.records[i].surname_key != c.records[i].surname_key ||
                     a.records[i].true_race != c.records[i].true_race;
  }
  CHECK(any_difference);
}

TEST_CASE("the true table tallies the generated records exactly") {
  SynthConfig config;
  config.n_geographies = 30;
  config.population_mean = 25;
  config.seed = 9;
  auto out = generate_population(config);

  CHECK(out.true_table.size() == 30);
  CHECK(out.geo_ids.size() == 30);
  std::unordered_map<std::string, RaceVector> recount;
  for (const auto& id : out.geo_ids) recount.emplace(id, RaceVector::zeros());
  for (const auto& rec : out.records) {
    REQUIRE(rec.true_race.has_value());
    recount.at(rec.geo_id)[static_cast<int>(*rec.true_race)] += 1.0;
    // Generated keys survive normalization unchanged.
    CHECK(normalize_name(rec.surname_key) == rec.surname_key);
  }
  for (const auto& [id, counts] : recount) {
    REQUIRE(out.true_table.counts.count(id) == 1);
    for (int r = 0; r < kNumRaces; ++r) CHECK(out.true_table.counts.at(id)[r] == counts[r]);
  }

  // Every record contributed one observation to each name dictionary.
  CHECK(out.surname_dict.total_count == static_cast<double>(out.records.size()));
  CHECK(out.first_dict.total_count == static_cast<double>(out.records.size()));
  CHECK(out.middle_dict.total_count == static_cast<double>(out.records.size()));
}

TEST_CASE("a single-race concentration produces a single-race population") {
  SynthConfig config;
  config.n_geographies = 6;
  config.population_mean = 80;
  config.poisson_population = false;
  config.dirichlet_concentration = RaceVector::counts(5, 0, 0, 0, 0);
  config.seed = 17;
  auto out = generate_population(config);
  REQUIRE(out.records.size() == 480);
  for (const auto& rec : out.records) CHECK(rec.true_race == Race::White);
  for (const auto& z : out.zeta) {
    CHECK(z[Race::White] == 1.0);
    CHECK(z[Race::Black] == 0.0);
  }
  CHECK(out.true_table.totals[Race::White] == 480.0);
}

TEST_CASE("zero-population geographies stay in the table without records") {
  SynthConfig config;
  config.n_geographies = 5;
  config.population_mean = 0;
  config.poisson_population = false;
  config.seed = 3;
  auto out = generate_population(config);
  CHECK(out.records.empty());
  CHECK(out.true_table.size() == 5);
  for (const auto& [id, counts] : out.true_table.counts) CHECK(counts.sum() == 0.0);
  // Empty input still yields dictionaries of the right field kinds.
  CHECK(out.surname_dict.field_kind == NameField::Surname);
  CHECK(out.middle_dict.field_kind == NameField::Middle);
}

TEST_CASE("generated race shares match the drawn proportions") {
  SynthConfig config;
  config.n_geographies = 4;
  config.population_mean = 20000;
  config.poisson_population = false;
  config.seed = 2718;
  auto out = generate_population(config);

  // Chi-squared against the known zeta, 4 dof, alpha=0.01 critical value.
  constexpr double kCritical = 13.2767;
  for (std::size_t g = 0; g < out.geo_ids.size(); ++g) {
    RaceVector observed = out.true_table.counts.at(out.geo_ids[g]);
    double n = observed.sum();
    REQUIRE(n == 20000.0);
    double stat = 0.0;
    for (int r = 0; r < kNumRaces; ++r) {
      double expected = n * out.zeta[g][r];
      if (expected <= 0.0) {
        CHECK(observed[r] == 0.0);
        continue;
      }
      double d = observed[r] - expected;
      stat += d * d / expected;
    }
    CHECK(stat < kCritical);
  }
}

TEST_CASE("corrupt_census is the identity when all rules are off") {
  SynthConfig config;
  config.n_geographies = 10;
  config.population_mean = 30;
  config.seed = 44;
  auto out = generate_population(config);
  GeoTable observed = corrupt_census(out.true_table, config);
  REQUIRE(observed.size() == out.true_table.size());
  for (const auto& [id, counts] : out.true_table.counts) {
    CHECK(observed.counts.at(id) == counts);
  }
}

TEST_CASE("corrupt_census zero-out and undercount behave as configured") {
  SynthConfig config;
  config.n_geographies = 40;
  config.population_mean = 60;
  config.seed = 50;
  auto out = generate_population(config);

  SECTION("certain zero-out erases one race everywhere") {
    config.zero_out_rules[static_cast<int>(Race::Asian)] = 1.0;
    GeoTable observed = corrupt_census(out.true_table, config);
    for (const auto& [id, counts] : observed.counts) {
      CHECK(counts[Race::Asian] == 0.0);
      // Other races untouched when their rule is 0 and undercount is 0.
      CHECK(counts[Race::White] == out.true_table.counts.at(id)[Race::White]);
    }
  }

  SECTION("corruption never increases a count and is seed-stable") {
    config.zero_out_rules = {0.2, 0.1, 0.3, 0.5, 0.05};
    config.undercount_rate = 0.25;
    GeoTable once = corrupt_census(out.true_table, config);
    GeoTable twice = corrupt_census(out.true_table, config);
    for (const auto& [id, counts] : once.counts) {
      for (int r = 0; r < kNumRaces; ++r) {
        CHECK(counts[r] <= out.true_table.counts.at(id)[r]);
        CHECK(counts[r] == twice.counts.at(id)[r]);
      }
    }
  }
}

TEST_CASE("zero-out probability translates into the zero-block population share") {
  SynthConfig config;
  config.n_geographies = 250;
  config.population_mean = 50;
  config.seed = 1001;
  config.zero_out_rules[static_cast<int>(Race::Asian)] = 0.25;
  auto out = generate_population(config);
  GeoTable observed = corrupt_census(out.true_table, config);
  auto summary = zero_count_summary(observed, out.records);
  // Zeroing 25% of geographies puts roughly 25% of asian residents in
  // zero-asian blocks (their natural zero share here is negligible).
  CHECK(summary.share(Race::Asian) > 0.15);
  CHECK(summary.share(Race::Asian) < 0.35);
  CHECK(summary.share(Race::White) < 0.05);
}

TEST_CASE("censor_dictionary removes mass by rule and threshold") {
  SynthConfig config;
  config.n_geographies = 50;
  config.population_mean = 40;
  config.seed = 77;
  auto out = generate_population(config);
  REQUIRE(out.surname_dict.size() > 0);

  SECTION("no rules: identity") {
    auto pub = censor_dictionary(out.surname_dict, config);
    CHECK(pub.dict.size() == out.surname_dict.size());
    CHECK(pub.report.removed_keys == 0);
    CHECK(pub.report.removed_mass.sum() == 0.0);
  }

  SECTION("threshold above every count empties the dictionary") {
    config.hide_min_count = 1e9;
    auto pub = censor_dictionary(out.surname_dict, config);
    CHECK(pub.dict.size() == 0);
    CHECK(pub.report.kept_keys == 0);
    CHECK(pub.report.removed_mass.sum() == out.surname_dict.total_count);
  }

  SECTION("a certain hide rule removes exactly the dominant race's names") {
    // Identity overlap: every surname is used by exactly one race, so the
    // dominant race is the owning race.
    config.hide_name_rules[static_cast<int>(Race::Asian)] = 1.0;
    auto pub = censor_dictionary(out.surname_dict, config);
    CHECK(pub.report.removed_share(Race::Asian) == 1.0);
    CHECK(pub.report.removed_share(Race::White) == 0.0);
    for (const auto& [key, counts] : pub.dict.counts) {
      CHECK(counts[Race::Asian] == 0.0);
    }
  }

  SECTION("partial hide rules are deterministic per key") {
    config.hide_name_rules[static_cast<int>(Race::White)] = 0.5;
    auto a = censor_dictionary(out.surname_dict, config);
    auto b = censor_dictionary(out.surname_dict, config);
    CHECK(a.dict.size() == b.dict.size());
    CHECK(a.report.removed_keys == b.report.removed_keys);
    CHECK(a.report.removed_keys > 0);
    CHECK(a.report.kept_keys > 0);
  }
}

TEST_CASE("partial name overlap still yields a valid population") {
  SynthConfig config;
  config.n_geographies = 8;
  config.population_mean = 50;
  config.surname_overlap = uniform_overlap(0.3);
  config.first_overlap = uniform_overlap(1.0);
  config.geo_name_correlation = true;
  config.seed = 5;
  auto out = generate_population(config);
  CHECK(out.records.size() > 0);
  for (const auto& rec : out.records) {
    CHECK(!rec.surname_key.empty());
    CHECK(!rec.first_key.empty());
  }
  CHECK(out.surname_dict.size() > 0);
}

TEST_CASE("overlap matrices validate their rows") {
  CHECK_THROWS_AS(uniform_overlap(1.5), std::invalid_argument);
  SynthConfig config;
  config.surname_overlap[0][0] = 0.5;  // row no longer sums to 1
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
  SynthConfig negative;
  negative.dirichlet_concentration = RaceVector::counts(-1, 1, 1, 1, 1);
  CHECK_THROWS_AS(negative.validate(), std::invalid_argument);
}
