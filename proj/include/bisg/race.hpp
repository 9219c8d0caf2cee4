#pragma once

#include <array>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bisg {

/// Number of racial categories. The category set and its ordering are fixed;
/// every table, file header, and output in this library indexes races in
/// exactly this order.
inline constexpr int kNumRaces = 5;

enum class Race : int { White = 0, Black = 1, Hispanic = 2, Asian = 3, Other = 4 };

inline constexpr std::array<std::string_view, kNumRaces> kRaceNames = {
    "White", "Black", "Hispanic", "Asian", "Other"};

inline constexpr std::array<Race, kNumRaces> kAllRaces = {
    Race::White, Race::Black, Race::Hispanic, Race::Asian, Race::Other};

inline std::string_view to_string(Race r) { return kRaceNames[static_cast<int>(r)]; }

/// Case-insensitive race label parsing against the documented synonym list.
/// Returns nullopt for labels outside the list.
inline std::optional<Race> parse_race(std::string_view text) {
  std::string t;
  t.reserve(text.size());
  for (char c : text) {
    unsigned char u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) t.push_back(static_cast<char>(std::tolower(u)));
  }
  if (t.empty()) return std::nullopt;
  // Synonyms: folded to lowercase alphanumerics before comparison, so
  // "African-American", "african american" and "africanamerican" all match.
  if (t == "white" || t == "w" || t == "wh" || t == "caucasian" || t == "nhwhite" ||
      t == "nonhispanicwhite")
    return Race::White;
  if (t == "black" || t == "b" || t == "bl" || t == "africanamerican" || t == "aa" ||
      t == "nhblack" || t == "nonhispanicblack")
    return Race::Black;
  if (t == "hispanic" || t == "h" || t == "hisp" || t == "latino" || t == "latina" ||
      t == "latinx")
    return Race::Hispanic;
  if (t == "asian" || t == "a" || t == "api" || t == "aapi" || t == "asianpacificislander" ||
      t == "asianorpacificislander")
    return Race::Asian;
  if (t == "other" || t == "o" || t == "oth" || t == "multiracial" || t == "twoormoreraces" ||
      t == "2prace" || t == "aian" || t == "americanindian" || t == "nativeamerican" ||
      t == "mixed")
    return Race::Other;
  return std::nullopt;
}

enum class VectorKind { Probability, Count };

/// Length-5 vector over the fixed race categories, used both for probability
/// vectors (posteriors, priors, true proportions) and for count vectors
/// (census counts, dictionary counts, Dirichlet hyperparameters).
struct RaceVector {
  std::array<double, kNumRaces> values{};
  VectorKind kind = VectorKind::Count;

  double& operator[](Race r) { return values[static_cast<int>(r)]; }
  double operator[](Race r) const { return values[static_cast<int>(r)]; }
  double& operator[](int i) { return values[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return values[static_cast<std::size_t>(i)]; }

  double sum() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }

  bool all_positive() const {
    return std::all_of(values.begin(), values.end(), [](double v) { return v > 0.0; });
  }

  /// Probability vector proportional to this one. Throws when the total
  /// mass is zero or not finite; zeros in individual entries are preserved.
  RaceVector normalized() const {
    double s = sum();
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw std::domain_error("RaceVector::normalized: total mass is zero or not finite");
    }
    RaceVector out;
    out.kind = VectorKind::Probability;
    for (int i = 0; i < kNumRaces; ++i) out.values[i] = values[i] / s;
    return out;
  }

  RaceVector& operator+=(const RaceVector& o) {
    for (int i = 0; i < kNumRaces; ++i) values[i] += o.values[i];
    return *this;
  }

  static RaceVector counts(double w, double b, double h, double a, double o) {
    return RaceVector{{w, b, h, a, o}, VectorKind::Count};
  }

  static RaceVector probabilities(double w, double b, double h, double a, double o) {
    return RaceVector{{w, b, h, a, o}, VectorKind::Probability};
  }

  static RaceVector zeros(VectorKind kind = VectorKind::Count) {
    return RaceVector{{0, 0, 0, 0, 0}, kind};
  }

  /// All-ones count vector: the default Dirichlet hyperparameter.
  static RaceVector ones() { return RaceVector{{1, 1, 1, 1, 1}, VectorKind::Count}; }

  static RaceVector uniform_probability() {
    return RaceVector{{0.2, 0.2, 0.2, 0.2, 0.2}, VectorKind::Probability};
  }
};

inline bool operator==(const RaceVector& a, const RaceVector& b) {
  return a.kind == b.kind && a.values == b.values;
}

/// True iff v is probability-kind, entries lie in [0,1], and they sum to 1
/// within 1e-9.
inline bool validate_probability_vector(const RaceVector& v) {
  if (v.kind != VectorKind::Probability) return false;
  double s = 0.0;
  for (double x : v.values) {
    if (!(x >= 0.0 && x <= 1.0)) return false;
    s += x;
  }
  return std::fabs(s - 1.0) <= 1e-9;
}

/// One input record: normalized name keys, a geography identifier, and an
/// optional self-reported race used only for dictionary building and
/// validation. Empty name keys mean the field is absent or unmatched.
struct PersonRecord {
  std::string record_id;
  std::string surname_key;
  std::string first_key;
  std::string middle_key;
  std::string geo_id;
  std::optional<Race> true_race;
};

enum class NameFieldSet { Last, LastFirst, LastFirstMiddle };

inline bool uses_first(NameFieldSet f) { return f != NameFieldSet::Last; }
inline bool uses_middle(NameFieldSet f) { return f == NameFieldSet::LastFirstMiddle; }

enum class PosteriorEstimator { LabelFrequency, RaoBlackwell };
enum class GibbsInit { Map, Sampled };

/// Run configuration for the collapsed Gibbs sampler. Defaults follow the
/// reference protocol: 1,500 iterations with a 500-iteration burn-in and a
/// uniform Dirichlet prior (alpha = 1).
struct SamplerConfig {
  int iterations_total = 1500;
  int burn_in = 500;
  RaceVector alpha = RaceVector::ones();
  std::uint64_t seed = 0;
  PosteriorEstimator posterior_estimator = PosteriorEstimator::LabelFrequency;
  NameFieldSet name_fields = NameFieldSet::Last;
  int parallel_partitions = 1;
  GibbsInit initialization = GibbsInit::Map;
  /// Test hook: recount n_rg from labels after every sweep and fail loudly
  /// on any divergence from the incrementally maintained counts.
  bool check_invariants = false;

  void validate() const {
    if (iterations_total <= 0) throw std::invalid_argument("iterations_total must be positive");
    if (burn_in < 0 || burn_in >= iterations_total)
      throw std::invalid_argument("burn_in must be in [0, iterations_total)");
    if (!alpha.all_positive()) throw std::invalid_argument("alpha entries must be positive");
    if (parallel_partitions <= 0)
      throw std::invalid_argument("parallel_partitions must be positive");
  }
};

}  // namespace bisg
