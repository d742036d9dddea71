#include "volatix/kinematics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "volatix/error.hpp"
#include "volatix/kernels.hpp"

namespace volatix {

std::string_view to_string(EventType t) noexcept {
  switch (t) {
    case EventType::Baseline: return "Baseline";
    case EventType::NearCrash: return "NearCrash";
    case EventType::Crash: return "Crash";
  }
  return "Baseline";
}

std::optional<EventType> parse_event_type(std::string_view s) noexcept {
  std::string key;
  for (const char c : s) {
    if (c == '-' || c == '_' || c == ' ') continue;
    key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (key == "baseline") return EventType::Baseline;
  if (key == "nearcrash") return EventType::NearCrash;
  if (key == "crash") return EventType::Crash;
  return std::nullopt;
}

void validate(const EventTrace& trace) {
  if (!(trace.sample_period > 0.0) || !std::isfinite(trace.sample_period)) {
    throw InvalidParameter("event " + trace.event_id + ": sample period must be positive");
  }
  const std::size_t n = trace.speed_kph.size();
  if (trace.accel_long.size() != n || trace.accel_lat.size() != n) {
    throw InvalidParameter("event " + trace.event_id + ": series lengths differ");
  }
  if (n < 2) throw DegenerateSeries("event " + trace.event_id + ": fewer than 2 samples");
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  if (!finite(trace.speed_kph) || !finite(trace.accel_long) || !finite(trace.accel_lat)) {
    throw InvalidParameter("event " + trace.event_id + ": non-finite sample");
  }
  if (trace.event_type == EventType::Baseline) {
    if (trace.reaction_index || trace.impact_index) {
      throw InvalidParameter("event " + trace.event_id + ": baseline carries a censoring marker");
    }
    return;
  }
  if (!trace.impact_index) {
    throw InvalidParameter("event " + trace.event_id + ": safety-critical event without impact");
  }
  if (*trace.impact_index >= n || (trace.reaction_index && *trace.reaction_index >= n)) {
    throw InvalidParameter("event " + trace.event_id + ": marker outside the series");
  }
}

std::vector<double> derive_series(std::span<const double> values, double dt) {
  if (values.size() < 2) throw DegenerateSeries("derive_series: need at least 2 samples");
  if (!(dt > 0.0)) throw InvalidParameter("derive_series: dt must be positive");
  std::vector<double> out(values.size() - 1);
  for (std::size_t i = 0; i + 1 < values.size(); ++i) out[i] = (values[i + 1] - values[i]) / dt;
  return out;
}

std::vector<double> acceleration_from_speed(std::span<const double> speed_kph, double dt) {
  std::vector<double> mps(speed_kph.begin(), speed_kph.end());
  for (double& v : mps) v *= kKphToMps;
  return derive_series(mps, dt);
}

CensoredTrace censor(const EventTrace& trace) {
  validate(trace);
  std::size_t keep = trace.size();
  if (trace.event_type != EventType::Baseline) {
    const std::size_t impact = *trace.impact_index;
    // A reaction at or after impact means the driver never reacted in time.
    keep = (trace.reaction_index && *trace.reaction_index < impact) ? *trace.reaction_index
                                                                     : impact;
  }
  if (keep < 2) {
    throw InsufficientData(trace.event_id, "event " + trace.event_id + ": only " +
                                               std::to_string(keep) +
                                               " sample(s) before censoring point");
  }
  CensoredTrace out;
  out.event_id = trace.event_id;
  out.event_type = trace.event_type;
  out.sample_period = trace.sample_period;
  const auto prefix = [keep](const std::vector<double>& v) {
    return std::vector<double>(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(keep));
  };
  out.speed_kph = prefix(trace.speed_kph);
  out.accel_long = prefix(trace.accel_long);
  out.accel_lat = prefix(trace.accel_lat);
  out.retained_count = keep;
  out.original_count = trace.size();
  return out;
}

SignPartition sign_partition(std::span<const double> values) {
  SignPartition p;
  for (const double v : values) {
    if (v > 0.0) {
      p.positive.push_back(v);
    } else if (v < 0.0) {
      p.negative.push_back(-v);
    }
  }
  return p;
}

std::optional<double> coefficient_of_variation(std::span<const double> values) {
  if (values.size() < 2) return std::nullopt;
  const auto [mean, ssd] = kernels::mean_ssd(values);
  if (mean == 0.0) return std::nullopt;
  const double sd = std::sqrt(ssd / static_cast<double>(values.size() - 1));
  return sd / std::abs(mean);
}

std::array<std::optional<double>, VolatilityVector::kFieldCount> VolatilityVector::fields()
    const {
  return {cv_accel_long,    cv_decel_long,    cv_accel_lat,    cv_decel_lat,
          cv_jerk_pos_long, cv_jerk_neg_long, cv_jerk_pos_lat, cv_jerk_neg_lat,
          mean_speed,       cv_speed};
}

VolatilityVector volatility_indices(const EventTrace& trace) {
  const CensoredTrace c = censor(trace);
  const auto jerk_long = derive_series(c.accel_long, c.sample_period);
  const auto jerk_lat = derive_series(c.accel_lat, c.sample_period);

  VolatilityVector v;
  const auto al = sign_partition(c.accel_long);
  const auto at = sign_partition(c.accel_lat);
  const auto jl = sign_partition(jerk_long);
  const auto jt = sign_partition(jerk_lat);
  v.cv_accel_long = coefficient_of_variation(al.positive);
  v.cv_decel_long = coefficient_of_variation(al.negative);
  v.cv_accel_lat = coefficient_of_variation(at.positive);
  v.cv_decel_lat = coefficient_of_variation(at.negative);
  v.cv_jerk_pos_long = coefficient_of_variation(jl.positive);
  v.cv_jerk_neg_long = coefficient_of_variation(jl.negative);
  v.cv_jerk_pos_lat = coefficient_of_variation(jt.positive);
  v.cv_jerk_neg_lat = coefficient_of_variation(jt.negative);
  v.mean_speed = kernels::mean_ssd(c.speed_kph).mean;
  v.cv_speed = coefficient_of_variation(c.speed_kph);
  return v;
}

}  // namespace volatix
