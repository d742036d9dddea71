#pragma once

// Choice data, coefficient layouts and the per-draw coefficient construction
// shared by every model class from plain MNL up to H-GMNL.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace volatix {

/// Baseline is the reference alternative; its utility is fixed at zero.
enum class Outcome { Baseline = 0, NearCrash = 1, Crash = 2 };

inline constexpr std::size_t kOutcomeCount = 3;
inline constexpr std::array<Outcome, kOutcomeCount> kOutcomes{Outcome::Baseline,
                                                               Outcome::NearCrash, Outcome::Crash};

std::string_view to_string(Outcome o) noexcept;
std::optional<Outcome> parse_outcome(std::string_view s) noexcept;

enum class ModelClass { MNL, RP_MNL, S_MNL, HS_MNL, GMNL_I, GMNL_II, H_GMNL };

std::string_view to_string(ModelClass c) noexcept;
/// Accepts "MNL", "RP-MNL", "RP_MNL", "HGMNL", "H-GMNL", ... (case-insensitive).
std::optional<ModelClass> parse_model_class(std::string_view s) noexcept;

/// What a model class switches on.
struct ClassTraits {
  bool random_coefficients = false;  // normal mixing w_i
  bool scale = false;                // sigma_i with tau
  bool scale_covariates = false;     // theta * z_i
  bool free_kappa = false;
  double fixed_kappa = 1.0;  // used when !free_kappa; irrelevant without scale
};

ClassTraits traits(ModelClass c) noexcept;

enum class DrawScheme { Halton, PseudoRandom };

std::string_view to_string(DrawScheme s) noexcept;
std::optional<DrawScheme> parse_draw_scheme(std::string_view s) noexcept;

/// Name of the alternative-specific constant in a layout.
inline constexpr std::string_view kConstant = "const";

struct Coefficient {
  std::string name;  // covariate column, or kConstant
  bool random = false;
};

struct CoefficientLayout {
  std::vector<Coefficient> crash;
  std::vector<Coefficient> nearcrash;

  std::size_t size() const noexcept { return crash.size() + nearcrash.size(); }
  std::size_t random_count() const noexcept;
};

struct ModelSpec {
  ModelClass model_class = ModelClass::MNL;
  CoefficientLayout layout;
  std::vector<std::string> scale_covariates;
  std::size_t draws = 500;
  DrawScheme scheme = DrawScheme::Halton;
  std::uint64_t seed = 1;
  std::size_t halton_burn = 50;
};

/// Throws InvalidParameter when the spec breaks a class restriction.
void validate(const ModelSpec& spec);

/// Number of simulation draws actually used: 1 when the class neither mixes
/// nor scales (plain MNL), spec.draws otherwise.
std::size_t effective_draws(const ModelSpec& spec) noexcept;

/// Standard-normal columns per event: one per random coefficient, plus the
/// pure scale draw (always last) when the class scales.
std::size_t draw_dimensions(const ModelSpec& spec) noexcept;

struct ParameterSet {
  std::vector<double> beta;      // crash coefficients then near-crash, layout order
  std::vector<double> omega_sd;  // one per random coefficient, layout order
  std::vector<double> theta;     // scale covariate weights
  double tau = 0.0;
  double kappa = 1.0;  // in [0, 1]
};

/// Parameters with the right shapes for spec, all zero except kappa.
ParameterSet zero_parameters(const ModelSpec& spec);
/// Throws InvalidParameter on wrong shapes, negative SDs/tau, kappa outside [0,1].
void validate(const ParameterSet& params, const ModelSpec& spec);

struct EventRecord {
  std::string event_id;
  Outcome observed = Outcome::Baseline;
  std::vector<double> x_crash;
  std::vector<double> x_nearcrash;
  std::vector<double> z_scale;
};

struct ChoiceDataset {
  std::vector<std::string> crash_names;
  std::vector<std::string> nearcrash_names;
  std::vector<std::string> scale_names;
  std::vector<EventRecord> events;

  std::size_t size() const noexcept { return events.size(); }
  std::array<std::size_t, kOutcomeCount> outcome_counts() const noexcept;
  /// Throws LayoutError on inconsistent widths or non-finite values.
  void validate() const;
};

/// Wide table of named covariates per event, the form data arrives in.
struct CovariateTable {
  std::vector<std::string> columns;
  std::vector<std::string> event_ids;
  std::vector<Outcome> observed;
  std::vector<std::vector<double>> rows;

  std::optional<std::size_t> column_index(std::string_view name) const;
};

/// Picks the layout's columns out of a table. Constants become 1.0.
/// Throws LayoutError on an unknown column or a non-finite value.
ChoiceDataset make_dataset(const CovariateTable& table, const ModelSpec& spec);

/// sigma_i = exp(-tau^2/2 + theta.z + tau*eps0); mean 1 when theta.z = 0.
double scale_factor(std::span<const double> theta, std::span<const double> z, double tau,
                    double eps0);

/// beta_i = sigma*beta + (kappa + (1-kappa)*sigma) * w, with w = omega_sd * draws.
std::vector<double> blend_coefficients(std::span<const double> beta,
                                       std::span<const double> w_draw, double sigma,
                                       double kappa);

struct Utilities {
  double crash = 0.0;
  double nearcrash = 0.0;
  double baseline = 0.0;
};

Utilities utilities(std::span<const double> beta_crash, std::span<const double> x_crash,
                    std::span<const double> beta_nearcrash,
                    std::span<const double> x_nearcrash);

struct Probabilities {
  double baseline = 0.0;
  double nearcrash = 0.0;
  double crash = 0.0;

  double operator[](Outcome o) const noexcept {
    return o == Outcome::Baseline ? baseline : (o == Outcome::NearCrash ? nearcrash : crash);
  }
};

/// Softmax over {0, V_nearcrash, V_crash}, max-shifted.
Probabilities choice_probabilities(const Utilities& v);

}  // namespace volatix
