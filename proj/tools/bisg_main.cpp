// Command-line front end for the imputation library: dictionary building,
// prediction, evaluation, synthetic-data generation, and diagnostics.
// Progress goes to stderr; stdout carries data only when --output is "-".
// Exit codes: 0 success, 1 data error, 2 usage error.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "bisg/bisg.hpp"

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

std::string join_args(int argc, char** argv) {
  std::string out;
  for (int i = 0; i < argc; ++i) {
    if (i) out.push_back(' ');
    out += argv[i];
  }
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string::npos ? pos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

/// "1" broadcasts; "w,b,h,a,o" sets each category.
bisg::RaceVector parse_race_values(const std::string& text, const char* what) {
  auto parts = split(text, ',');
  bisg::RaceVector v = bisg::RaceVector::zeros();
  if (parts.size() == 1) {
    double x = 0.0;
    if (!bisg::parse_double(parts[0], x)) {
      throw CLI::ValidationError(std::string(what) + ": cannot parse '" + text + "'");
    }
    for (int r = 0; r < bisg::kNumRaces; ++r) v[r] = x;
    return v;
  }
  if (parts.size() != bisg::kNumRaces) {
    throw CLI::ValidationError(std::string(what) + ": expected 1 or 5 comma-separated values");
  }
  for (int r = 0; r < bisg::kNumRaces; ++r) {
    double x = 0.0;
    if (!bisg::parse_double(parts[static_cast<std::size_t>(r)], x)) {
      throw CLI::ValidationError(std::string(what) + ": cannot parse '" + text + "'");
    }
    v[r] = x;
  }
  return v;
}

std::array<double, bisg::kNumRaces> parse_rule_array(const std::string& text, const char* what) {
  bisg::RaceVector v = parse_race_values(text, what);
  std::array<double, bisg::kNumRaces> out{};
  for (int r = 0; r < bisg::kNumRaces; ++r) out[static_cast<std::size_t>(r)] = v[r];
  return out;
}

bisg::NameFieldSet parse_name_fields(const std::string& text) {
  if (text == "last") return bisg::NameFieldSet::Last;
  if (text == "last+first") return bisg::NameFieldSet::LastFirst;
  if (text == "last+first+middle") return bisg::NameFieldSet::LastFirstMiddle;
  throw CLI::ValidationError("--names must be last, last+first, or last+first+middle");
}

void write_text(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::fwrite(text.data(), 1, text.size(), stdout);
    std::fflush(stdout);
  } else {
    bisg::write_file_bytes(path, text);
  }
}

void emit_manifest(bisg::RunManifest manifest, const Clock::time_point& started,
                   const std::string& path) {
  manifest.wall_time_seconds =
      std::chrono::duration<double>(Clock::now() - started).count();
  std::string text = manifest.to_json().dump(2);
  text.push_back('\n');
  if (path.empty()) {
    std::fputs(text.c_str(), stderr);
  } else {
    bisg::write_file_bytes(path, text);
  }
}

std::shared_ptr<const bisg::NameDictionary> load_dict_if_exists(const fs::path& path,
                                                                bisg::NameField field) {
  if (!fs::exists(path)) return nullptr;
  return std::make_shared<bisg::NameDictionary>(bisg::load_dictionary_csv(path.string(), field));
}

// ---------------------------------------------------------------------------
// build-dict

struct BuildDictOptions {
  std::vector<std::string> records;  // label=path
  std::string holdout_source;
  std::string census;
  std::string spanish;
  std::string geo_counts;
  std::string national_counts;
  std::string out_dir = ".";
  double census_weight = 1.0;
  double records_weight = 1.0;
};

int run_build_dict(const BuildDictOptions& opt, const std::string& command_line,
                   const Clock::time_point& started) {
  if (opt.records.empty() && opt.census.empty()) {
    std::fputs("build-dict: need --records and/or --census\n", stderr);
    return 2;
  }
  bisg::RunManifest manifest;
  manifest.command_line = command_line;

  std::vector<bisg::PersonRecord> labeled;
  for (const auto& entry : opt.records) {
    auto eq = entry.find('=');
    std::string label = eq == std::string::npos ? entry : entry.substr(0, eq);
    std::string path = eq == std::string::npos ? entry : entry.substr(eq + 1);
    if (!opt.holdout_source.empty() && label == opt.holdout_source) {
      std::fprintf(stderr, "build-dict: holding out source %s (%s)\n", label.c_str(),
                   path.c_str());
      continue;
    }
    auto loaded = bisg::load_labeled_records(path);
    std::fprintf(stderr, "build-dict: %s: %zu records (%zu rows skipped)\n", path.c_str(),
                 loaded.records.size(), loaded.rows_skipped);
    manifest.add_input(path);
    for (auto& rec : loaded.records) {
      if (!rec.true_race) {
        std::fprintf(stderr, "build-dict: %s has unlabeled records\n", path.c_str());
        return 1;
      }
      labeled.push_back(std::move(rec));
    }
  }

  std::optional<bisg::NameDictionary> census_dict;
  if (!opt.census.empty()) {
    bisg::RaceVector national = bisg::RaceVector::zeros();
    if (!opt.national_counts.empty()) {
      national = parse_race_values(opt.national_counts, "--national-counts");
    } else if (!opt.geo_counts.empty()) {
      auto geo = bisg::load_geo_counts(opt.geo_counts);
      manifest.add_input(opt.geo_counts);
      national = geo.table.totals;
    } else {
      std::fputs("build-dict: --census needs --geo-counts or --national-counts\n", stderr);
      return 2;
    }
    auto loaded = bisg::load_census_surname_file(opt.census, national);
    manifest.add_input(opt.census);
    std::fprintf(stderr,
                 "build-dict: census surnames: %zu loaded, %zu skipped, %zu flagged\n",
                 loaded.report.rows_loaded, loaded.report.rows_skipped,
                 loaded.report.rows_flagged);
    census_dict = std::move(loaded.dict);
    if (!opt.spanish.empty()) {
      auto spanish = bisg::load_spanish_surname_list(opt.spanish);
      manifest.add_input(opt.spanish);
      std::fprintf(stderr, "build-dict: spanish surnames: %zu loaded\n",
                   spanish.report.rows_loaded);
      census_dict = bisg::merge_dictionaries(*census_dict, spanish.dict);
    }
  }

  fs::create_directories(opt.out_dir);
  auto out_path = [&](const char* name) { return (fs::path(opt.out_dir) / name).string(); };

  if (census_dict) {
    bisg::save_dictionary_csv(*census_dict, out_path("dict_census_last.csv"));
  }
  if (!labeled.empty()) {
    auto last = bisg::build_dictionary(labeled, bisg::NameField::Surname);
    auto first = bisg::build_dictionary(labeled, bisg::NameField::First);
    auto middle = bisg::build_dictionary(labeled, bisg::NameField::Middle);
    if (census_dict) {
      last = bisg::merge_dictionaries(*census_dict, last,
                                      {opt.census_weight, opt.records_weight});
    }
    bisg::save_dictionary_csv(last, out_path("dict_last.csv"));
    bisg::save_dictionary_csv(first, out_path("dict_first.csv"));
    bisg::save_dictionary_csv(middle, out_path("dict_middle.csv"));
    std::fprintf(stderr, "build-dict: wrote dictionaries for %zu labeled records\n",
                 labeled.size());
  } else if (census_dict) {
    bisg::save_dictionary_csv(*census_dict, out_path("dict_last.csv"));
  }

  std::string config = "holdout=" + opt.holdout_source + "\ncensus_weight=" +
                       bisg::format_double(opt.census_weight) + "\nrecords_weight=" +
                       bisg::format_double(opt.records_weight) + "\n";
  manifest.config_digest = bisg::RunManifest::digest_hex(config);
  emit_manifest(std::move(manifest), started, out_path("manifest.json"));
  return 0;
}

// ---------------------------------------------------------------------------
// predict

struct PredictOptions {
  std::string method = "bisg";
  std::string names = "last";
  std::string input;
  std::string geo_counts;
  std::string dict_dir = ".";
  std::string output = "-";
  int iterations = 1500;
  int burnin = 500;
  std::string alpha = "1";
  std::uint64_t seed = 0;
  int partitions = 1;
  std::string estimator = "label_frequency";
  std::string init = "map";
};

int run_predict(const PredictOptions& opt, const std::string& command_line,
                const Clock::time_point& started) {
  if (opt.method != "bisg" && opt.method != "fbisg") {
    std::fputs("predict: --method must be bisg or fbisg\n", stderr);
    return 2;
  }
  bisg::NameFieldSet fields = parse_name_fields(opt.names);

  bisg::RunManifest manifest;
  manifest.command_line = command_line;
  manifest.seed = opt.seed;

  auto records = bisg::load_labeled_records(opt.input);
  manifest.add_input(opt.input);
  auto geo = bisg::load_geo_counts(opt.geo_counts);
  manifest.add_input(opt.geo_counts);
  std::fprintf(stderr, "predict: %zu records, %zu geographies\n", records.records.size(),
               geo.table.size());

  bisg::DictionarySet dicts;
  fs::path dict_dir(opt.dict_dir);
  dicts.surname = load_dict_if_exists(dict_dir / "dict_last.csv", bisg::NameField::Surname);
  dicts.census_surname =
      load_dict_if_exists(dict_dir / "dict_census_last.csv", bisg::NameField::Surname);
  if (bisg::uses_first(fields)) {
    dicts.first = load_dict_if_exists(dict_dir / "dict_first.csv", bisg::NameField::First);
  }
  if (bisg::uses_middle(fields)) {
    dicts.middle = load_dict_if_exists(dict_dir / "dict_middle.csv", bisg::NameField::Middle);
  }
  if (!dicts.surname) {
    std::fprintf(stderr, "predict: no dict_last.csv in %s\n", opt.dict_dir.c_str());
    return 1;
  }
  manifest.add_input((dict_dir / "dict_last.csv").string());
  if (dicts.first) manifest.add_input((dict_dir / "dict_first.csv").string());
  if (dicts.middle) manifest.add_input((dict_dir / "dict_middle.csv").string());

  bisg::InferenceRun run;
  if (opt.method == "bisg") {
    run = bisg::run_bisg(records.records, dicts, geo.table, fields);
  } else {
    bisg::SamplerConfig config;
    config.iterations_total = opt.iterations;
    config.burn_in = opt.burnin;
    config.alpha = parse_race_values(opt.alpha, "--alpha");
    config.seed = opt.seed;
    config.parallel_partitions = opt.partitions;
    config.name_fields = fields;
    if (opt.estimator == "rao_blackwell") {
      config.posterior_estimator = bisg::PosteriorEstimator::RaoBlackwell;
    } else if (opt.estimator != "label_frequency") {
      std::fputs("predict: --estimator must be label_frequency or rao_blackwell\n", stderr);
      return 2;
    }
    if (opt.init == "sampled") {
      config.initialization = bisg::GibbsInit::Sampled;
    } else if (opt.init != "map") {
      std::fputs("predict: --init must be map or sampled\n", stderr);
      return 2;
    }
    config.validate();
    run = bisg::run_fbisg(records.records, dicts, geo.table, config);
  }
  if (!run.excluded_records.empty()) {
    std::fprintf(stderr, "predict: excluded %zu records with unresolvable geographies\n",
                 run.excluded_records.size());
  }
  if (run.degenerate_count > 0) {
    std::fprintf(stderr, "predict: %zu records flagged degenerate\n", run.degenerate_count);
  }

  std::string out;
  bisg::save_predictions(run.predictions, out);
  write_text(opt.output, out);

  std::string config_text = "method=" + opt.method + "\nnames=" + opt.names +
                            "\niterations=" + std::to_string(opt.iterations) + "\nburnin=" +
                            std::to_string(opt.burnin) + "\nalpha=" + opt.alpha + "\nseed=" +
                            std::to_string(opt.seed) + "\npartitions=" +
                            std::to_string(opt.partitions) + "\nestimator=" + opt.estimator +
                            "\ninit=" + opt.init + "\n";
  manifest.config_digest = bisg::RunManifest::digest_hex(config_text);
  emit_manifest(std::move(manifest), started,
                opt.output == "-" ? std::string() : opt.output + ".manifest.json");
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
  std::string predictions;
  std::string records;
  std::string geo_counts;
  std::string strata = "none";
  std::string scheme_label = "default";
  int bins = 10;
  std::string json_out;
  std::string csv_out;
  std::string calibration_out;
};

int run_eval(const EvalOptions& opt, const std::string& command_line,
             const Clock::time_point& started) {
  auto strata = bisg::parse_strata(opt.strata);
  if (!strata) {
    std::fputs("eval: --strata must be none, zero_count, or name_match\n", stderr);
    return 2;
  }
  bisg::RunManifest manifest;
  manifest.command_line = command_line;

  auto preds = bisg::load_predictions_csv(opt.predictions);
  manifest.add_input(opt.predictions);
  auto records = bisg::load_labeled_records(opt.records);
  manifest.add_input(opt.records);

  std::optional<bisg::GeoLoadResult> geo;
  if (!opt.geo_counts.empty()) {
    geo = bisg::load_geo_counts(opt.geo_counts);
    manifest.add_input(opt.geo_counts);
  }

  // Group rows by prediction method; each group is evaluated independently.
  std::vector<bisg::PosteriorPrediction> by_method[2];
  for (auto& p : preds) {
    by_method[p.method == bisg::PredictionMethod::Fbisg ? 1 : 0].push_back(std::move(p));
  }

  nlohmann::json out = nlohmann::json::object();
  std::string flat_csv;
  std::string calib_csv;
  for (int m = 0; m < 2; ++m) {
    if (by_method[m].empty()) continue;
    const char* method = m == 1 ? "fbisg" : "bisg";
    auto report =
        bisg::evaluate(by_method[m], records.records, geo ? &geo->table : nullptr, *strata,
                       opt.bins);
    out[method][opt.scheme_label] = bisg::eval_report_to_json(report);
    std::string block = bisg::eval_report_to_csv(report);
    std::string prefix = std::string(method) + "," + opt.scheme_label + ",";
    bool first_line = true;
    for (const auto& line : split(block, '\n')) {
      if (line.empty()) continue;
      if (first_line) {
        if (flat_csv.empty()) flat_csv = "method,scheme," + line + "\n";
        first_line = false;
        continue;
      }
      flat_csv += prefix + line + "\n";
    }
    std::string cal_block = bisg::calibration_to_csv(report);
    bool first_cal = true;
    for (const auto& line : split(cal_block, '\n')) {
      if (line.empty()) continue;
      if (first_cal) {
        if (calib_csv.empty()) calib_csv = "method,scheme," + line + "\n";
        first_cal = false;
        continue;
      }
      calib_csv += prefix + line + "\n";
    }
  }

  std::string json_text = out.dump(2);
  json_text.push_back('\n');
  if (!opt.json_out.empty()) write_text(opt.json_out, json_text);
  if (!opt.csv_out.empty()) write_text(opt.csv_out, flat_csv);
  if (!opt.calibration_out.empty()) write_text(opt.calibration_out, calib_csv);
  if (opt.json_out.empty() && opt.csv_out.empty() && opt.calibration_out.empty()) {
    write_text("-", json_text);
  }

  std::string config_text = "strata=" + opt.strata + "\nbins=" + std::to_string(opt.bins) +
                            "\nscheme=" + opt.scheme_label + "\n";
  manifest.config_digest = bisg::RunManifest::digest_hex(config_text);
  emit_manifest(std::move(manifest), started,
                opt.json_out.empty() || opt.json_out == "-" ? std::string()
                                                            : opt.json_out + ".manifest.json");
  return 0;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateOptions {
  int geos = 100;
  double pop_mean = 50.0;
  bool fixed_pop = false;
  std::string concentration = "8,4,3,2,1";
  std::string surname_pools = "400";
  std::string first_pools = "150";
  std::string middle_pools = "150";
  double surname_overlap = 0.0;
  double first_overlap = 0.0;
  double middle_overlap = 0.0;
  std::string zero_out = "0";
  double undercount = 0.0;
  std::string hide = "0";
  double hide_min_count = 0.0;
  std::uint64_t seed = 1;
  bool geo_correlation = false;
  int clusters = 5;
  std::string out_dir = "synth";
};

std::array<int, bisg::kNumRaces> parse_pool_sizes(const std::string& text, const char* what) {
  auto v = parse_race_values(text, what);
  std::array<int, bisg::kNumRaces> out{};
  for (int r = 0; r < bisg::kNumRaces; ++r) {
    out[static_cast<std::size_t>(r)] = static_cast<int>(v[r]);
  }
  return out;
}

int run_simulate(const SimulateOptions& opt, const std::string& command_line,
                 const Clock::time_point& started) {
  bisg::SynthConfig config;
  config.n_geographies = opt.geos;
  config.population_mean = opt.pop_mean;
  config.poisson_population = !opt.fixed_pop;
  config.dirichlet_concentration = parse_race_values(opt.concentration, "--concentration");
  config.surname_pool_sizes = parse_pool_sizes(opt.surname_pools, "--surname-pools");
  config.first_pool_sizes = parse_pool_sizes(opt.first_pools, "--first-pools");
  config.middle_pool_sizes = parse_pool_sizes(opt.middle_pools, "--middle-pools");
  config.surname_overlap = bisg::uniform_overlap(opt.surname_overlap);
  config.first_overlap = bisg::uniform_overlap(opt.first_overlap);
  config.middle_overlap = bisg::uniform_overlap(opt.middle_overlap);
  config.zero_out_rules = parse_rule_array(opt.zero_out, "--zero-out");
  config.undercount_rate = opt.undercount;
  config.hide_name_rules = parse_rule_array(opt.hide, "--hide");
  config.hide_min_count = opt.hide_min_count;
  config.seed = opt.seed;
  config.geo_name_correlation = opt.geo_correlation;
  config.geo_clusters = opt.clusters;
  config.validate();

  auto pop = bisg::generate_population(config);
  auto observed = bisg::corrupt_census(pop.true_table, config);
  auto censored = bisg::censor_dictionary(pop.surname_dict, config);
  std::fprintf(stderr,
               "simulate: %zu records, %zu geographies, censored %zu of %zu surnames\n",
               pop.records.size(), pop.geo_ids.size(), censored.report.removed_keys,
               censored.report.removed_keys + censored.report.kept_keys);

  fs::create_directories(opt.out_dir);
  auto out_path = [&](const char* name) { return (fs::path(opt.out_dir) / name).string(); };
  bisg::save_labeled_records(pop.records, out_path("records.csv"));
  bisg::save_geo_counts(pop.true_table, out_path("geo_true.csv"));
  bisg::save_geo_counts(observed, out_path("geo_observed.csv"));
  bisg::save_dictionary_csv(pop.surname_dict, out_path("dict_last_full.csv"));
  bisg::save_dictionary_csv(pop.first_dict, out_path("dict_first_full.csv"));
  bisg::save_dictionary_csv(pop.middle_dict, out_path("dict_middle_full.csv"));
  bisg::save_dictionary_csv(censored.dict, out_path("dict_last_public.csv"));

  bisg::RunManifest manifest;
  manifest.command_line = command_line;
  manifest.seed = opt.seed;
  nlohmann::json truth;
  truth["n_records"] = pop.records.size();
  truth["n_geographies"] = pop.geo_ids.size();
  bisg::RaceVector mean_zeta = bisg::RaceVector::zeros();
  for (const auto& z : pop.zeta) mean_zeta += z;
  if (!pop.zeta.empty()) {
    for (int r = 0; r < bisg::kNumRaces; ++r) {
      mean_zeta[r] /= static_cast<double>(pop.zeta.size());
    }
  }
  nlohmann::json zeta = nlohmann::json::object();
  for (int r = 0; r < bisg::kNumRaces; ++r) {
    zeta[std::string(bisg::kRaceNames[static_cast<std::size_t>(r)])] = mean_zeta[r];
  }
  truth["mean_zeta"] = std::move(zeta);
  nlohmann::json removed = nlohmann::json::object();
  for (int r = 0; r < bisg::kNumRaces; ++r) {
    removed[std::string(bisg::kRaceNames[static_cast<std::size_t>(r)])] =
        censored.report.removed_share(static_cast<bisg::Race>(r));
  }
  truth["censored_surname_mass_share"] = std::move(removed);

  std::string config_text =
      "geos=" + std::to_string(opt.geos) + "\npop_mean=" + bisg::format_double(opt.pop_mean) +
      "\nfixed=" + (opt.fixed_pop ? "1" : "0") + "\nconcentration=" + opt.concentration +
      "\nzero_out=" + opt.zero_out + "\nundercount=" + bisg::format_double(opt.undercount) +
      "\nhide=" + opt.hide + "\nhide_min_count=" + bisg::format_double(opt.hide_min_count) +
      "\nseed=" + std::to_string(opt.seed) + "\n";
  manifest.config_digest = bisg::RunManifest::digest_hex(config_text);

  nlohmann::json mj = manifest.to_json();
  mj["ground_truth"] = std::move(truth);
  mj["wall_time_seconds"] = std::chrono::duration<double>(Clock::now() - started).count();
  std::string text = mj.dump(2);
  text.push_back('\n');
  bisg::write_file_bytes(out_path("manifest.json"), text);
  return 0;
}

// ---------------------------------------------------------------------------
// diagnose

struct DiagnoseOptions {
  std::string records;
  std::string geo_counts;
  std::string dict_dir;
  std::string output = "-";
};

int run_diagnose(const DiagnoseOptions& opt, const std::string& command_line,
                 const Clock::time_point& started) {
  auto records = bisg::load_labeled_records(opt.records);
  auto geo = bisg::load_geo_counts(opt.geo_counts);

  nlohmann::json out;
  out["n_records"] = records.records.size();
  out["n_geographies"] = geo.table.size();

  auto zero = bisg::zero_count_summary(geo.table, records.records);
  nlohmann::json zj = nlohmann::json::object();
  for (int r = 0; r < bisg::kNumRaces; ++r) {
    auto ri = static_cast<std::size_t>(r);
    nlohmann::json row;
    row["records"] = zero.records_total[ri];
    row["in_zero_count_geographies"] = zero.records_in_zero[ri];
    row["share"] = zero.share(static_cast<bisg::Race>(r));
    zj[std::string(bisg::kRaceNames[ri])] = std::move(row);
  }
  out["zero_count"] = std::move(zj);
  out["unresolved_geographies"] = zero.unresolved_geo;

  if (!opt.dict_dir.empty()) {
    fs::path dict_dir(opt.dict_dir);
    bisg::DictionarySet dicts;
    dicts.census_surname =
        load_dict_if_exists(dict_dir / "dict_census_last.csv", bisg::NameField::Surname);
    dicts.surname = load_dict_if_exists(dict_dir / "dict_last.csv", bisg::NameField::Surname);
    dicts.first = load_dict_if_exists(dict_dir / "dict_first.csv", bisg::NameField::First);
    dicts.middle = load_dict_if_exists(dict_dir / "dict_middle.csv", bisg::NameField::Middle);
    nlohmann::json cov = nlohmann::json::object();
    for (auto scheme :
         {bisg::CoverageScheme::CensusLast, bisg::CoverageScheme::AugmentedLast,
          bisg::CoverageScheme::LastFirst, bisg::CoverageScheme::LastFirstMiddle}) {
      auto report = bisg::coverage_report(dicts, records.records, scheme);
      nlohmann::json sj = nlohmann::json::object();
      for (int r = 0; r < bisg::kNumRaces; ++r) {
        auto ri = static_cast<std::size_t>(r);
        nlohmann::json row;
        row["records"] = report.total[ri];
        row["unmatched"] = report.unmatched[ri];
        row["share"] = report.unmatched_share(static_cast<bisg::Race>(r));
        sj[std::string(bisg::kRaceNames[ri])] = std::move(row);
      }
      cov[std::string(bisg::to_string(scheme))] = std::move(sj);
    }
    out["coverage"] = std::move(cov);
  }

  std::string text = out.dump(2);
  text.push_back('\n');
  write_text(opt.output, text);

  bisg::RunManifest manifest;
  manifest.command_line = command_line;
  manifest.add_input(opt.records);
  manifest.add_input(opt.geo_counts);
  manifest.config_digest = bisg::RunManifest::digest_hex("diagnose\n");
  emit_manifest(std::move(manifest), started, std::string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  const auto started = Clock::now();
  const std::string command_line = join_args(argc, argv);

  CLI::App app{"Race and ethnicity imputation from names and geolocation"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a config file (flags take precedence)");

  BuildDictOptions bd;
  auto* cmd_bd = app.add_subcommand("build-dict", "Build name-race dictionaries");
  cmd_bd->add_option("--records", bd.records,
                     "Labeled records CSV, repeatable, optionally label=path");
  cmd_bd->add_option("--holdout-source", bd.holdout_source,
                     "Exclude the records file with this label");
  cmd_bd->add_option("--census", bd.census, "Census surname frequency CSV");
  cmd_bd->add_option("--spanish", bd.spanish, "Census Spanish surname list CSV");
  cmd_bd->add_option("--geo-counts", bd.geo_counts,
                     "Geo counts CSV supplying national race totals");
  cmd_bd->add_option("--national-counts", bd.national_counts,
                     "Explicit national race totals w,b,h,a,o");
  cmd_bd->add_option("--out-dir", bd.out_dir, "Output directory");
  cmd_bd->add_option("--census-weight", bd.census_weight, "Merge weight for census counts");
  cmd_bd->add_option("--records-weight", bd.records_weight, "Merge weight for labeled counts");

  PredictOptions pr;
  auto* cmd_pr = app.add_subcommand("predict", "Impute race posteriors for records");
  cmd_pr->add_option("--method", pr.method, "bisg or fbisg");
  cmd_pr->add_option("--names", pr.names, "last, last+first, or last+first+middle");
  cmd_pr->add_option("--input", pr.input, "Records CSV")->required();
  cmd_pr->add_option("--geo-counts", pr.geo_counts, "Geo counts CSV")->required();
  cmd_pr->add_option("--dict-dir", pr.dict_dir, "Directory with dict_*.csv files");
  cmd_pr->add_option("--output", pr.output, "Predictions CSV path, or - for stdout");
  cmd_pr->add_option("--iterations", pr.iterations, "Total Gibbs sweeps");
  cmd_pr->add_option("--burnin", pr.burnin, "Burn-in sweeps to discard");
  cmd_pr->add_option("--alpha", pr.alpha, "Dirichlet prior, one value or w,b,h,a,o");
  cmd_pr->add_option("--seed", pr.seed, "Random seed");
  cmd_pr->add_option("--partitions", pr.partitions, "Worker threads over geography shards");
  cmd_pr->add_option("--estimator", pr.estimator, "label_frequency or rao_blackwell");
  cmd_pr->add_option("--init", pr.init, "map or sampled");

  EvalOptions ev;
  auto* cmd_ev = app.add_subcommand("eval", "Score predictions against ground truth");
  cmd_ev->add_option("--predictions", ev.predictions, "Predictions CSV")->required();
  cmd_ev->add_option("--records", ev.records, "Labeled records CSV with truth")->required();
  cmd_ev->add_option("--geo-counts", ev.geo_counts, "Geo counts CSV (zero_count strata)");
  cmd_ev->add_option("--strata", ev.strata, "none, zero_count, or name_match");
  cmd_ev->add_option("--scheme-label", ev.scheme_label, "Name-scheme label for the report");
  cmd_ev->add_option("--bins", ev.bins, "Calibration bins");
  cmd_ev->add_option("--json", ev.json_out, "Metrics JSON path");
  cmd_ev->add_option("--csv", ev.csv_out, "Flat metrics CSV path");
  cmd_ev->add_option("--calibration", ev.calibration_out, "Calibration points CSV path");

  SimulateOptions sim;
  auto* cmd_sim = app.add_subcommand("simulate", "Generate a synthetic benchmark dataset");
  cmd_sim->add_option("--geos", sim.geos, "Number of geographies");
  cmd_sim->add_option("--pop-mean", sim.pop_mean, "Mean persons per geography");
  cmd_sim->add_flag("--fixed-pop", sim.fixed_pop, "Fixed instead of Poisson population");
  cmd_sim->add_option("--concentration", sim.concentration, "Dirichlet concentration");
  cmd_sim->add_option("--surname-pools", sim.surname_pools, "Surname pool sizes");
  cmd_sim->add_option("--first-pools", sim.first_pools, "First-name pool sizes");
  cmd_sim->add_option("--middle-pools", sim.middle_pools, "Middle-name pool sizes");
  cmd_sim->add_option("--surname-overlap", sim.surname_overlap, "Surname pool overlap [0,1]");
  cmd_sim->add_option("--first-overlap", sim.first_overlap, "First-name pool overlap [0,1]");
  cmd_sim->add_option("--middle-overlap", sim.middle_overlap, "Middle-name pool overlap [0,1]");
  cmd_sim->add_option("--zero-out", sim.zero_out, "Per-race census zero-out probabilities");
  cmd_sim->add_option("--undercount", sim.undercount, "Census undercount rate");
  cmd_sim->add_option("--hide", sim.hide, "Per-race dictionary hide probabilities");
  cmd_sim->add_option("--hide-min-count", sim.hide_min_count, "Dictionary count threshold");
  cmd_sim->add_option("--seed", sim.seed, "Random seed");
  cmd_sim->add_flag("--geo-correlation", sim.geo_correlation,
                    "Correlate name pools with geography clusters");
  cmd_sim->add_option("--clusters", sim.clusters, "Geography clusters for correlation");
  cmd_sim->add_option("--out-dir", sim.out_dir, "Output directory");

  DiagnoseOptions dg;
  auto* cmd_dg = app.add_subcommand("diagnose", "Zero-count and name-coverage diagnostics");
  cmd_dg->add_option("--records", dg.records, "Labeled records CSV")->required();
  cmd_dg->add_option("--geo-counts", dg.geo_counts, "Geo counts CSV")->required();
  cmd_dg->add_option("--dict-dir", dg.dict_dir, "Directory with dict_*.csv files");
  cmd_dg->add_option("--output", dg.output, "Report path, or - for stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (cmd_bd->parsed()) return run_build_dict(bd, command_line, started);
    if (cmd_pr->parsed()) return run_predict(pr, command_line, started);
    if (cmd_ev->parsed()) return run_eval(ev, command_line, started);
    if (cmd_sim->parsed()) return run_simulate(sim, command_line, started);
    if (cmd_dg->parsed()) return run_diagnose(dg, command_line, started);
  } catch (const CLI::ValidationError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
