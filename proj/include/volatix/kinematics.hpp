#pragma once

// Event traces -> censored series -> the eight sign-partitioned CV indices.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace volatix {

enum class EventType { Baseline, NearCrash, Crash };

std::string_view to_string(EventType t) noexcept;
/// Accepts "Baseline", "NearCrash", "Crash" (case-insensitive, '-'/'_' ignored).
std::optional<EventType> parse_event_type(std::string_view s) noexcept;

inline constexpr double kDefaultSamplePeriod = 0.1;
inline constexpr double kKphToMps = 1.0 / 3.6;

struct EventTrace {
  std::string event_id;
  EventType event_type = EventType::Baseline;
  double sample_period = kDefaultSamplePeriod;  // seconds
  std::vector<double> speed_kph;
  std::vector<double> accel_long;  // m/s^2
  std::vector<double> accel_lat;   // m/s^2
  std::optional<std::size_t> reaction_index;  // driver starts reacting
  std::optional<std::size_t> impact_index;

  std::size_t size() const noexcept { return speed_kph.size(); }
};

/// Throws InvalidParameter (bad period, mismatched lengths, markers out of
/// range or on the wrong event type) or DegenerateSeries (< 2 samples).
void validate(const EventTrace& trace);

struct CensoredTrace {
  std::string event_id;
  EventType event_type = EventType::Baseline;
  double sample_period = kDefaultSamplePeriod;
  std::vector<double> speed_kph;
  std::vector<double> accel_long;
  std::vector<double> accel_lat;
  std::size_t retained_count = 0;
  std::size_t original_count = 0;
};

/// Forward difference divided by dt; output has one element fewer.
std::vector<double> derive_series(std::span<const double> values, double dt);

/// Converts kph to m/s and differentiates once.
std::vector<double> acceleration_from_speed(std::span<const double> speed_kph, double dt);

/// Keeps only driving before the driver reacts (or before impact when there
/// was no reaction, or the reaction came at/after impact). Baselines are kept
/// whole. Throws InsufficientData when fewer than 2 samples survive.
CensoredTrace censor(const EventTrace& trace);

struct SignPartition {
  std::vector<double> positive;  // values > 0
  std::vector<double> negative;  // |values| for values < 0
};

/// Exact zeros belong to neither side.
SignPartition sign_partition(std::span<const double> values);

/// Sample SD (n-1) over mean. nullopt marks a missing component: fewer than
/// two values or a zero mean.
std::optional<double> coefficient_of_variation(std::span<const double> values);

struct VolatilityVector {
  static constexpr std::size_t kFieldCount = 10;
  static constexpr std::array<std::string_view, kFieldCount> kFieldNames{
      "cv_accel_long",    "cv_decel_long",    "cv_accel_lat",     "cv_decel_lat",
      "cv_jerk_pos_long", "cv_jerk_neg_long", "cv_jerk_pos_lat",  "cv_jerk_neg_lat",
      "mean_speed",       "cv_speed"};

  std::optional<double> cv_accel_long;
  std::optional<double> cv_decel_long;
  std::optional<double> cv_accel_lat;
  std::optional<double> cv_decel_lat;
  std::optional<double> cv_jerk_pos_long;
  std::optional<double> cv_jerk_neg_long;
  std::optional<double> cv_jerk_pos_lat;
  std::optional<double> cv_jerk_neg_lat;
  double mean_speed = 0.0;  // kph
  std::optional<double> cv_speed;

  std::array<std::optional<double>, kFieldCount> fields() const;
};

VolatilityVector volatility_indices(const EventTrace& trace);

}  // namespace volatix
