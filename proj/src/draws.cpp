#include "volatix/draws.hpp"

#include <cmath>

#include "volatix/error.hpp"
#include "volatix/parallel.hpp"
#include "volatix/random.hpp"

namespace volatix {

bool is_prime(unsigned n) noexcept {
  if (n < 2) return false;
  for (unsigned d = 2; d * d <= n; ++d) {
    if (n % d == 0) return false;
  }
  return true;
}

std::vector<unsigned> first_primes(std::size_t n) {
  std::vector<unsigned> primes;
  for (unsigned c = 2; primes.size() < n; ++c) {
    if (is_prime(c)) primes.push_back(c);
  }
  return primes;
}

namespace {

double radical_inverse(unsigned base, std::uint64_t index) {
  const double inv = 1.0 / base;
  double f = inv;
  double r = 0.0;
  while (index > 0) {
    r += f * static_cast<double>(index % base);
    index /= base;
    f *= inv;
  }
  return r;
}

}  // namespace

std::vector<double> halton_sequence(unsigned base, std::size_t count, std::size_t burn) {
  if (!is_prime(base)) throw InvalidParameter("halton_sequence: base must be prime");
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = radical_inverse(base, burn + i + 1);
  return out;
}

DrawBlock::DrawBlock(std::size_t events, std::size_t draws, std::size_t dims, DrawScheme scheme,
                     std::uint64_t seed, std::size_t halton_burn)
    : events_(events), draws_(draws), dims_(dims), scheme_(scheme), seed_(seed) {
  if (draws == 0) throw InvalidParameter("draw count must be positive");
  values_.resize(events * dims * draws);
  if (dims == 0) return;

  if (scheme == DrawScheme::Halton) {
    // One long sequence per dimension; event i takes the i-th run of `draws`
    // points. Each dimension gets a seeded Cranley-Patterson shift so that
    // different seeds give different (still low-discrepancy) point sets.
    const auto primes = first_primes(dims);
    std::vector<double> shift(dims);
    for (std::size_t k = 0; k < dims; ++k) {
      shift[k] = Rng(derive_seed(seed, "halton-shift", k)).uniform();
    }
    const std::size_t n_chunks = (events + kEventChunk - 1) / kEventChunk;
    parallel_for(n_chunks, [&](std::size_t chunk) {
      const std::size_t lo = chunk * kEventChunk;
      const std::size_t hi = std::min(events, lo + kEventChunk);
      for (std::size_t i = lo; i < hi; ++i) {
        for (std::size_t k = 0; k < dims; ++k) {
          double* col = values_.data() + (i * dims + k) * draws;
          for (std::size_t d = 0; d < draws; ++d) {
            const std::uint64_t idx = halton_burn + i * draws + d + 1;
            double u = radical_inverse(primes[k], idx) + shift[k];
            if (u >= 1.0) u -= 1.0;
            if (u <= 0.0) u = 0.5 / static_cast<double>(draws * events + 1);
            col[d] = normal_quantile(u);
          }
        }
      }
    });
    return;
  }

  const std::size_t n_chunks = (events + kEventChunk - 1) / kEventChunk;
  parallel_for(n_chunks, [&](std::size_t chunk) {
    const std::size_t lo = chunk * kEventChunk;
    const std::size_t hi = std::min(events, lo + kEventChunk);
    for (std::size_t i = lo; i < hi; ++i) {
      Rng rng(derive_seed(seed, "draws", i));
      double* block = values_.data() + i * dims * draws;
      for (std::size_t j = 0; j < dims * draws; ++j) block[j] = rng.normal();
    }
  });
}

DrawBlock make_draws(const ModelSpec& spec, std::size_t n_events) {
  return DrawBlock(n_events, effective_draws(spec), draw_dimensions(spec), spec.scheme, spec.seed,
                   spec.halton_burn);
}

}  // namespace volatix
