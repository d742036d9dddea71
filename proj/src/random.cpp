#include "volatix/random.hpp"

#include <boost/math/special_functions/erf.hpp>
#include <cmath>

#include "volatix/error.hpp"

namespace volatix {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {
std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}
}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose, std::string_view id) {
  return mix64(mix64(seed ^ fnv1a(purpose)) ^ fnv1a(id));
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose, std::uint64_t ordinal) {
  return mix64(mix64(seed ^ fnv1a(purpose)) + mix64(ordinal));
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidParameter("normal_quantile: p outside (0,1)");
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
}

double Rng::uniform() {
  // 53 random bits, offset by half a step so 0 and 1 are unreachable.
  const std::uint64_t bits = engine_() >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) return 0;
  const std::uint64_t limit = ~0ULL - (~0ULL % n);
  std::uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return v % n;
}

}  // namespace volatix
