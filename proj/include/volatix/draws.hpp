#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "volatix/model.hpp"

namespace volatix {

bool is_prime(unsigned n) noexcept;
/// First n primes in ascending order.
std::vector<unsigned> first_primes(std::size_t n);

/// Radical-inverse sequence in base `base`, elements burn .. burn+count-1
/// (the first element of the unburned sequence is index 1, i.e. 1/base).
std::vector<double> halton_sequence(unsigned base, std::size_t count, std::size_t burn = 0);

/// Read-only view of one event's draws: `dims` columns of `draws` values each.
struct EventDraws {
  std::size_t draws = 1;
  std::size_t dims = 0;
  const double* data = nullptr;

  std::span<const double> column(std::size_t dim) const noexcept {
    return {data + dim * draws, draws};
  }
};

/// Standard-normal draws for every event, generated once and reused for all
/// likelihood evaluations. Storage is event-major, then dimension, then draw.
class DrawBlock {
 public:
  DrawBlock() = default;
  DrawBlock(std::size_t events, std::size_t draws, std::size_t dims, DrawScheme scheme,
            std::uint64_t seed, std::size_t halton_burn = 50);

  std::size_t events() const noexcept { return events_; }
  std::size_t draws() const noexcept { return draws_; }
  std::size_t dims() const noexcept { return dims_; }
  DrawScheme scheme() const noexcept { return scheme_; }
  std::uint64_t seed() const noexcept { return seed_; }

  EventDraws event(std::size_t i) const noexcept {
    return {draws_, dims_, values_.data() + i * dims_ * draws_};
  }

 private:
  std::size_t events_ = 0;
  std::size_t draws_ = 1;
  std::size_t dims_ = 0;
  DrawScheme scheme_ = DrawScheme::Halton;
  std::uint64_t seed_ = 0;
  std::vector<double> values_;
};

/// The draw block a spec implies for a dataset of n events.
DrawBlock make_draws(const ModelSpec& spec, std::size_t n_events);

}  // namespace volatix
