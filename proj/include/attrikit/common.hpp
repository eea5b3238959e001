// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace attrikit {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dimension/shape mismatches in numeric operations.
struct ShapeError : Error {
  using Error::Error;
};

/// Problems with input data: files, manifests, degenerate label sets.
struct DataError : Error {
  using Error::Error;
};

/// Malformed serialized artifacts (checkpoints, tables).
struct FormatError : DataError {
  using DataError::DataError;
};

/// Numeric failures: NaN/Inf states, divergence, failed gradient checks.
struct NumericError : Error {
  using Error::Error;
};

/// Command-line usage errors.
struct UsageError : Error {
  using Error::Error;
};

// splitmix64; used to derive independent RNG streams from one seed.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t seed, uint64_t tag) { return mix64(mix64(seed) ^ tag); }
inline uint64_t derive_seed(uint64_t seed, uint64_t tag, uint64_t tag2) {
  return mix64(derive_seed(seed, tag) ^ mix64(tag2));
}

/// FNV-1a 64-bit hash; stamps run artifacts with their resolved config.
inline uint64_t fnv1a64(const std::string& text) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Deterministic RNG with hand-rolled distributions so that streams are
/// reproducible independent of the standard library implementation.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(mix64(seed ^ 0xa5a5a5a5deadbeefULL)) {}

  uint64_t next_u64() {
    // xorshift64* on a splitmix-initialized state
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 0x2545f4914f6cdd1dULL;
  }

  /// Uniform double in [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }
  float uniform_float(float lo, float hi) { return static_cast<float>(uniform(lo, hi)); }

  /// Uniform integer in [lo, hi] inclusive.
  int uniform_int(int lo, int hi) {
    if (hi <= lo) return lo;
    uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next_u64() % span);
  }

  bool bernoulli(double p) { return next_double() < p; }

  /// Standard normal via Box-Muller (spare value cached).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - next_double();  // (0, 1]
    double u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  float normal_float(float mean, float stddev) {
    return mean + stddev * static_cast<float>(normal());
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = next_u64() % i;
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace attrikit
