#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string_view>

namespace bisg {

/// FNV-1a 64-bit hash. Used for input digests and for deriving
/// per-geography RNG seeds from string identifiers.
inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// splitmix64 finalizer; decorrelates structured seed material.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for the stream owned by one named substream (e.g. a geography).
/// Streams derived from distinct names are independent for any fixed
/// master seed, and do not depend on how work is partitioned.
inline std::uint64_t derive_stream_seed(std::uint64_t master, std::string_view name) {
  return splitmix64(master ^ fnv1a64(name));
}

/// Deterministic random stream. mt19937_64 has a standardized sequence,
/// and all variate mappings below are written out explicitly, so a given
/// seed yields identical draws on every platform.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Index in [0, n) drawn proportionally to nonnegative weights.
  /// total must equal the sum of the first n weights.
  int categorical(const double* weights, int n, double total) {
    double u = uniform() * total;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      acc += weights[i];
      if (u < acc) return i;
    }
    // Guard against accumulated rounding: return the last positive weight.
    for (int i = n - 1; i >= 0; --i) {
      if (weights[i] > 0.0) return i;
    }
    return n - 1;
  }

  /// Standard normal via Box-Muller (consumes exactly two uniforms).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  /// Gamma(shape, 1) by Marsaglia-Tsang, with the u^(1/a) boost for shape < 1.
  double gamma(double shape) {
    if (shape <= 0.0) throw std::invalid_argument("gamma: shape must be positive");
    if (shape < 1.0) {
      double u = uniform();
      while (u <= 0.0) u = uniform();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  /// Dirichlet draw; writes n normalized components into out.
  void dirichlet(const double* concentration, int n, double* out) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      out[i] = gamma(concentration[i]);
      total += out[i];
    }
    if (total <= 0.0) throw std::runtime_error("dirichlet: degenerate draw");
    for (int i = 0; i < n; ++i) out[i] /= total;
  }

  /// Poisson via Knuth products, chunked so exp(-lambda) never underflows.
  long poisson(double mean) {
    if (mean < 0.0) throw std::invalid_argument("poisson: mean must be nonnegative");
    long count = 0;
    while (mean > 0.0) {
      double chunk = mean > 60.0 ? 60.0 : mean;
      mean -= chunk;
      double limit = std::exp(-chunk);
      double product = uniform();
      while (product > limit) {
        ++count;
        product *= uniform();
      }
    }
    return count;
  }

  /// Binomial(n, p) by explicit Bernoulli trials; counts here are small.
  long binomial(long n, double p) {
    if (p <= 0.0) return 0;
    if (p >= 1.0) return n;
    long k = 0;
    for (long i = 0; i < n; ++i) {
      if (uniform() < p) ++k;
    }
    return k;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace bisg
