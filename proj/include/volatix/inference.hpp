#pragma once

// Post-estimation: average marginal effects, probability curves over a
// covariate grid and perturbation scenarios for outcome-share forecasting.

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "volatix/estimation.hpp"

namespace volatix {

struct InferenceOptions {
  /// Allow analysis of a fit whose optimizer did not converge.
  bool allow_unconverged = false;
};

struct MarginalEffect {
  std::string covariate;
  bool discrete = false;  // binary covariate: P(x=1) - P(x=0)
  std::array<double, kOutcomeCount> effect{};  // indexed by Outcome
};

struct MarginalEffectTable {
  std::vector<MarginalEffect> rows;
};

/// Covariate names that enter any utility or the scale function, in layout order.
std::vector<std::string> model_covariates(const ModelSpec& spec);

/// Average over events of per-event effects. Continuous covariates use a
/// central difference with step max(1e-4, 1e-4*|x|). Integrates over the
/// fit's own draw block.
MarginalEffectTable marginal_effects(const FitResult& fit, const ChoiceDataset& data,
                                     const InferenceOptions& options = {});

/// Mean simulated probability per event over a dataset.
Probabilities mean_probabilities(const FitResult& fit, const ChoiceDataset& data);

struct ProbabilityCurve {
  std::string covariate;
  std::vector<double> grid;
  std::vector<Probabilities> mean_probability;  // one per grid value
  std::vector<std::string> warnings;
};

/// For each grid value, sets the covariate for every event and averages the
/// simulated probabilities.
ProbabilityCurve probability_curve(const FitResult& fit, const ChoiceDataset& data,
                                   const std::string& covariate, const std::vector<double>& grid,
                                   const InferenceOptions& options = {});

enum class PerturbationMode { Percent, StandardDeviation };

struct Perturbation {
  std::string covariate;
  PerturbationMode mode = PerturbationMode::Percent;
  /// Percent mode: decrease by `amount` percent. SD mode: subtract
  /// `amount` sample standard deviations.
  double amount = 0.0;
  Outcome target = Outcome::Crash;
  std::string label;  // generated when empty
};

struct ScenarioResult {
  std::string label;
  std::array<double, kOutcomeCount> share_pct{};      // indexed by Outcome
  std::array<long long, kOutcomeCount> count{};       // share x denominator, half-to-even
  std::array<double, kOutcomeCount> delta_share_pct{};  // percentage points vs. baseline
  std::array<long long, kOutcomeCount> delta_count{};
};

/// Runs the unperturbed baseline followed by each perturbation. The
/// denominator for predicted counts defaults to the number of events.
std::vector<ScenarioResult> scenario_simulate(const FitResult& fit, const ChoiceDataset& data,
                                              const std::vector<Perturbation>& perturbations,
                                              std::optional<double> denominator = std::nullopt,
                                              const InferenceOptions& options = {});

/// Single perturbation; result includes deltas against the unperturbed run.
ScenarioResult scenario_simulate(const FitResult& fit, const ChoiceDataset& data,
                                 const Perturbation& perturbation,
                                 std::optional<double> denominator = std::nullopt,
                                 const InferenceOptions& options = {});

/// The seven forecasting scenarios: 10%..50% decreases in steps of 10, then
/// one and two standard-deviation decreases.
std::vector<Perturbation> paper_scheme(const std::string& covariate, Outcome target = Outcome::Crash);

/// Applies a perturbation to the covariate inside one outcome's utility.
/// Throws InvalidScenario when the covariate is not part of that utility.
ChoiceDataset perturb(const ChoiceDataset& data, const Perturbation& perturbation);

}  // namespace volatix
