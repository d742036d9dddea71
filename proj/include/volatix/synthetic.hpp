#pragma once

// Data generators with known truth, used for parameter recovery and for
// exercising the feature pipeline end to end.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "volatix/kinematics.hpp"
#include "volatix/model.hpp"

namespace volatix {

enum class Distribution { Normal, Bernoulli, Uniform };

struct CovariateDistribution {
  std::string name;
  Distribution kind = Distribution::Normal;
  double a = 0.0;  // normal: mean; bernoulli: p; uniform: lower bound
  double b = 1.0;  // normal: sd; uniform: upper bound (unused for bernoulli)
};

struct GeneratorConfig {
  ModelSpec spec;
  ParameterSet truth;
  std::size_t n_events = 1000;
  std::vector<CovariateDistribution> covariates;
  std::uint64_t seed = 1;
};

/// Volatility covariates at the magnitudes seen in school-zone data
/// (means around 0.9-1.1, SDs around 0.3-0.45).
std::vector<CovariateDistribution> default_volatility_covariates();

struct SyntheticSample {
  CovariateTable table;
  ChoiceDataset dataset;
  std::vector<Probabilities> true_probabilities;  // conditional on the event's own draws
};

/// Draws covariates, w_i and eps0 per event, forms the event's coefficients
/// and samples the outcome. Deterministic given the seed.
SyntheticSample generate_sample(const GeneratorConfig& config);
ChoiceDataset generate(const GeneratorConfig& config);

struct TraceTargets {
  // Unset targets default to 1.0 when the series has any dispersion.
  std::optional<double> cv_jerk_pos_long;
  std::optional<double> cv_jerk_neg_long;
  std::optional<double> cv_jerk_pos_lat;
  std::optional<double> cv_jerk_neg_lat;
  double mean_speed_kph = 50.0;
  /// Mean |jerk| in m/s^3; 0 requests constant-acceleration (zero) series.
  double jerk_magnitude = 1.0;
};

struct TraceGeneratorConfig {
  std::size_t n_baseline = 10;
  std::size_t n_nearcrash = 0;
  std::size_t n_crash = 0;
  std::size_t samples = 300;
  double sample_period = kDefaultSamplePeriod;
  TraceTargets targets;
  /// Share of safety-critical events where the driver reacts before impact.
  double reaction_share = 0.855;
  std::uint64_t seed = 1;
};

/// Throws InvalidTarget on infeasible targets.
std::vector<EventTrace> generate_traces(const TraceGeneratorConfig& config);

}  // namespace volatix
