#pragma once

// Simulated choice probabilities, the simulated log-likelihood and its
// analytic score for every model class.

#include <Eigen/Dense>
#include <cstddef>
#include <string>
#include <vector>

#include "volatix/draws.hpp"
#include "volatix/model.hpp"

namespace volatix {

/// Index bookkeeping derived from a ModelSpec. The natural parameter vector
/// is laid out as [beta | omega_sd | theta | tau? | kappa?].
class ModelStructure {
 public:
  explicit ModelStructure(const ModelSpec& spec);

  struct RandomSlot {
    Outcome side;       // Crash or NearCrash
    std::size_t index;  // position within that outcome's coefficients
  };

  const ModelSpec& spec() const noexcept { return spec_; }
  const ClassTraits& class_traits() const noexcept { return traits_; }
  std::size_t crash_size() const noexcept { return n_crash_; }
  std::size_t nearcrash_size() const noexcept { return n_nearcrash_; }
  const std::vector<RandomSlot>& random_slots() const noexcept { return random_; }
  std::size_t theta_size() const noexcept { return spec_.scale_covariates.size(); }
  bool has_scale() const noexcept { return traits_.scale; }
  bool free_kappa() const noexcept { return traits_.free_kappa; }

  std::size_t omega_offset() const noexcept { return n_crash_ + n_nearcrash_; }
  std::size_t theta_offset() const noexcept { return omega_offset() + random_.size(); }
  std::size_t tau_offset() const noexcept { return theta_offset() + theta_size(); }
  std::size_t kappa_offset() const noexcept { return tau_offset() + (has_scale() ? 1 : 0); }
  /// Number of free parameters, k in the information criteria.
  std::size_t parameter_count() const noexcept { return kappa_offset() + (free_kappa() ? 1 : 0); }

  std::vector<std::string> parameter_names() const;

  Eigen::VectorXd pack(const ParameterSet& p) const;
  ParameterSet unpack(const Eigen::VectorXd& natural) const;

 private:
  ModelSpec spec_;
  ClassTraits traits_;
  std::size_t n_crash_ = 0;
  std::size_t n_nearcrash_ = 0;
  std::vector<RandomSlot> random_;
};

/// Floor applied to simulated probabilities before taking logs.
inline constexpr double kProbabilityFloor = 1e-300;

/// Mean over draws of the logit probabilities for one event.
Probabilities simulated_probability(const ModelStructure& model, const ParameterSet& params,
                                    const EventRecord& event, const EventDraws& draws);

struct LikelihoodValue {
  double loglik = 0.0;
  std::size_t underflows = 0;  // events clamped at kProbabilityFloor
  Eigen::VectorXd gradient;    // d loglik / d natural parameters; empty if not requested
};

/// Sum over events of ln(mean over draws of P(observed)).
LikelihoodValue log_likelihood(const ModelStructure& model, const ParameterSet& params,
                               const ChoiceDataset& data, const DrawBlock& draws,
                               bool with_gradient = false);

double log_likelihood(const ModelSpec& spec, const ParameterSet& params, const ChoiceDataset& data,
                      const DrawBlock& draws);

namespace detail {
/// Same as log_likelihood without the parameter-range checks, for finite
/// differences that step across a boundary (omega or kappa at a bound).
LikelihoodValue log_likelihood_unchecked(const ModelStructure& model, const ParameterSet& params,
                                         const ChoiceDataset& data, const DrawBlock& draws,
                                         bool with_gradient);
}  // namespace detail

/// Per-event score rows (n_events x k), natural parameterization.
Eigen::MatrixXd event_scores(const ModelStructure& model, const ParameterSet& params,
                             const ChoiceDataset& data, const DrawBlock& draws);

}  // namespace volatix
