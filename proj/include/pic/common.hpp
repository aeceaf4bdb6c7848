#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace pic {

inline constexpr const char* kVersion = "0.1.0";

// Base for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A scorer was asked to evaluate a proposal or condition kind it does not accept.
class KindMismatchError : public Error {
 public:
  using Error::Error;
};

// A scorer produced a NaN/Inf energy or gradient.
class NonFiniteEnergyError : public Error {
 public:
  using Error::Error;
};

// A gradient was requested from an energy-only scorer.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration or constructor arguments.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A guided reverse step produced a non-finite intermediate.
class GuidanceBlowupError : public Error {
 public:
  using Error::Error;
};

// Grid-world action rejected (occupied target or out of bounds).
class InvalidActionError : public Error {
 public:
  using Error::Error;
};

// Candidate sampler exhausted its resample budget without a valid action.
class StuckError : public Error {
 public:
  using Error::Error;
};

// Config file rejected; carries the offending line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, int line)
      : Error(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

inline double require_finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw NonFiniteEnergyError(std::string("non-finite value from ") + what);
  }
  return v;
}

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Deterministic counter-free generator (splitmix64 core, Box-Muller normals).
// Streams derived via Rng::stream(seed, index) are independent, so per-sample
// work can run serially or in parallel with identical output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(mix64(seed)) {}

  static Rng stream(std::uint64_t seed, std::uint64_t index) {
    return Rng(mix64(seed) ^ mix64(index * 0x9e3779b97f4a7c15ull + 0x632be59bd9b4e019ull));
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1]; safe under log().
  double uniform_pos() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    cached_ = r * std::sin(a);
    have_cached_ = true;
    return r * std::cos(a);
  }

  Eigen::VectorXd normal_vector(int dim) {
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v[i] = normal();
    return v;
  }

  // Unbiased uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw ConfigError("Rng::below: n must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

 private:
  std::uint64_t state_;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

}  // namespace pic
