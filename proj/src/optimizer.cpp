#include "volatix/optimizer.hpp"

#include <cmath>
#include <limits>

namespace volatix {

OptimizerResult minimize_bfgs(const Objective& f, Eigen::VectorXd x0,
                              const OptimizerOptions& options) {
  const Eigen::Index n = x0.size();
  OptimizerResult res;
  res.x = std::move(x0);
  Eigen::VectorXd g(n);
  res.value = f(res.x, &g);
  Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(n, n);
  bool scaled_initial = false;

  for (std::size_t iter = 0;; ++iter) {
    res.gradient = g;
    res.gradient_norm = n > 0 ? g.cwiseAbs().maxCoeff() : 0.0;
    res.iterations = iter;
    if (options.on_iteration) options.on_iteration(iter, res.value, res.gradient_norm);
    if (res.gradient_norm <= options.gradient_tolerance) {
      res.converged = true;
      return res;
    }
    if (iter >= options.max_iterations || !std::isfinite(res.value)) return res;

    Eigen::VectorXd dir = -h_inv * g;
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      h_inv.setIdentity();
      dir = -g;
      slope = -g.squaredNorm();
    }
    // Keep the first trial step from leaving the region where the objective
    // is finite: cap its max-norm.
    const double max_step = dir.cwiseAbs().maxCoeff();
    double step = max_step > 5.0 ? 5.0 / max_step : 1.0;

    Eigen::VectorXd x_new(n), g_new(n);
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int k = 0; k < 60; ++k) {
      x_new = res.x + step * dir;
      f_new = f(x_new, &g_new);
      if (std::isfinite(f_new) && f_new <= res.value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No descent possible along any tried step; restart from steepest
      // descent once, otherwise give up at the current point.
      if (h_inv.isIdentity()) return res;
      h_inv.setIdentity();
      continue;
    }

    const Eigen::VectorXd s = x_new - res.x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled_initial) {
        h_inv *= sy / y.squaredNorm();
        scaled_initial = true;
      }
      const double rho = 1.0 / sy;
      const Eigen::VectorXd hy = h_inv * y;
      h_inv += (rho * rho * y.dot(hy) + rho) * (s * s.transpose()) -
               rho * (hy * s.transpose() + s * hy.transpose());
    }
    res.x = x_new;
    res.value = f_new;
    g = g_new;
    res.trace.push_back(f_new);
  }
}

}  // namespace volatix
