#pragma once

// Maximum simulated likelihood for the whole model family.

#include <Eigen/Dense>
#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "volatix/draws.hpp"
#include "volatix/likelihood.hpp"
#include "volatix/model.hpp"

namespace volatix {

struct InformationCriteria {
  double aic = 0.0;
  double pseudo_r2 = 0.0;
};

/// aic = 2k - 2 loglik, pseudo R^2 = 1 - loglik/loglik_null.
InformationCriteria information_criteria(double loglik, double loglik_null, std::size_t k);

/// Log-likelihood of the intercept-only MNL at its optimum: sum n_j ln(n_j/N).
double null_log_likelihood(const ChoiceDataset& data);

/// Throws CollinearCovariate when a design block is rank deficient (for
/// example a constant covariate next to an intercept).
void check_identification(const ModelSpec& spec, const ChoiceDataset& data);

enum class CovarianceMethod { Hessian, Bhhh, Robust };

std::string_view to_string(CovarianceMethod m) noexcept;

struct Covariance {
  CovarianceMethod method = CovarianceMethod::Hessian;
  bool available = false;
  Eigen::MatrixXd vcov;
  Eigen::VectorXd se;
  std::string note;
};

struct StandardErrors {
  Covariance hessian;
  Covariance bhhh;
  Covariance robust;  // sandwich H^-1 B H^-1
  bool fell_back = false;  // Hessian unusable, BHHH reported instead

  const Covariance& preferred() const noexcept { return fell_back ? bhhh : hessian; }
  bool available() const noexcept { return preferred().available; }
};

/// Covariance of the natural parameters at an optimum. The Hessian is the
/// central difference of the analytic score.
StandardErrors standard_errors(const ModelStructure& model, const ParameterSet& estimates,
                               const ChoiceDataset& data, const DrawBlock& draws);

struct FitOptions {
  std::size_t max_iterations = 500;
  double gradient_tolerance = 1e-5;  // max-norm of the mean-per-event score
  /// Random restarts; 0 picks the default (3 for GMNL classes, 1 otherwise).
  std::size_t starts = 0;
  /// Additional starting points tried before the random ones.
  std::vector<ParameterSet> extra_starts;
  /// Rescale continuous covariates by their SD while optimizing.
  bool standardize = false;
  std::function<void(const std::string&)> log;
};

struct FitResult {
  ModelSpec spec;
  ParameterSet estimates;
  std::vector<std::string> parameter_names;
  Eigen::VectorXd estimate_vector;  // natural parameters, packed
  StandardErrors errors;
  double loglik = 0.0;
  double loglik_null = 0.0;
  double aic = 0.0;
  double pseudo_r2 = 0.0;
  std::size_t parameter_count = 0;
  std::size_t n_events = 0;
  bool converged = false;
  std::size_t iterations = 0;
  double gradient_norm = 0.0;
  std::size_t underflows = 0;
  std::size_t best_start = 0;
  std::vector<double> start_logliks;
  std::vector<double> loglik_trace;
  std::vector<std::string> warnings;

  const Eigen::VectorXd& se() const noexcept { return errors.preferred().se; }
  const Eigen::MatrixXd& vcov() const noexcept { return errors.preferred().vcov; }
};

/// Maximizes the simulated log-likelihood over the unconstrained
/// reparameterization (tau = exp, kappa = logistic, omega = |.|).
FitResult fit(const ModelSpec& spec, const ChoiceDataset& data, const FitOptions& options = {});

}  // namespace volatix
