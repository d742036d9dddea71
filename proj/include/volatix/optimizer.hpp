#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <vector>

namespace volatix {

/// Objective to minimize. Must fill `grad` when it is non-null.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;

struct OptimizerOptions {
  std::size_t max_iterations = 500;
  double gradient_tolerance = 1e-5;  // max-norm
  std::function<void(std::size_t iteration, double value, double gradient_norm)> on_iteration;
};

struct OptimizerResult {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd gradient;
  double gradient_norm = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> trace;  // objective after each accepted step
};

/// BFGS with a backtracking Armijo line search. Curvature pairs with
/// s'y <= 0 are skipped rather than allowed to break positive definiteness.
OptimizerResult minimize_bfgs(const Objective& f, Eigen::VectorXd x0,
                              const OptimizerOptions& options = {});

}  // namespace volatix
