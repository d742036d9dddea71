#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace volatix {

/// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Stable sub-seed for (seed, purpose, id). Uses only fixed-width integer
/// arithmetic so the value is identical across platforms and runs.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose, std::string_view id = {});
std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose, std::uint64_t ordinal);

/// Standard normal quantile.
double normal_quantile(double p);

/// Portable generator: mt19937_64 bits mapped to doubles by hand, because the
/// standard distributions are allowed to differ between library vendors.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on the open interval (0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() { return normal_quantile(uniform()); }
  double normal(double mean, double sd) { return mean + sd * normal(); }
  bool bernoulli(double p) { return uniform() < p; }
  /// Integer in [0, n).
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace volatix
