#pragma once

// Independent oracles and small fixtures shared by the test binaries. Nothing
// here calls into the library code it is used to check.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "volatix/kinematics.hpp"
#include "volatix/model.hpp"

namespace testsupport {

// ---------------------------------------------------------------- kinematics

/// Straight-line recomputation of the volatility vector: explicit loops,
/// population-style naive accumulation, no shared helpers.
struct BruteVolatility {
  std::array<std::optional<double>, 10> fields;
};

inline std::optional<double> brute_cv(const std::vector<double>& v) {
  if (v.size() < 2) return std::nullopt;
  long double sum = 0;
  for (double x : v) sum += x;
  const long double mean = sum / v.size();
  if (mean == 0) return std::nullopt;
  long double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return static_cast<double>(std::sqrt(ss / (v.size() - 1)) / mean);
}

inline BruteVolatility brute_volatility(const volatix::EventTrace& t) {
  std::size_t keep = t.speed_kph.size();
  if (t.event_type != volatix::EventType::Baseline) {
    keep = *t.impact_index;
    if (t.reaction_index && *t.reaction_index < *t.impact_index) keep = *t.reaction_index;
  }
  const double dt = t.sample_period;
  auto split = [](const std::vector<double>& s, std::vector<double>& pos, std::vector<double>& neg) {
    for (double x : s) {
      if (x > 0) pos.push_back(x);
      if (x < 0) neg.push_back(-x);
    }
  };
  std::vector<double> al(t.accel_long.begin(), t.accel_long.begin() + keep);
  std::vector<double> at(t.accel_lat.begin(), t.accel_lat.begin() + keep);
  std::vector<double> jl, jt;
  for (std::size_t i = 0; i + 1 < keep; ++i) {
    jl.push_back((al[i + 1] - al[i]) / dt);
    jt.push_back((at[i + 1] - at[i]) / dt);
  }
  BruteVolatility out;
  const std::vector<double>* series[4] = {&al, &at, &jl, &jt};
  const int slot[4] = {0, 2, 4, 6};
  for (int s = 0; s < 4; ++s) {
    std::vector<double> p, n;
    split(*series[s], p, n);
    out.fields[slot[s]] = brute_cv(p);
    out.fields[slot[s] + 1] = brute_cv(n);
  }
  std::vector<double> sp(t.speed_kph.begin(), t.speed_kph.begin() + keep);
  long double total = 0;
  for (double x : sp) total += x;
  out.fields[8] = static_cast<double>(total / sp.size());
  out.fields[9] = brute_cv(sp);
  return out;
}

// ---------------------------------------------------------------- quadrature

struct GaussHermite {
  std::vector<double> nodes;    // for weight exp(-x^2)
  std::vector<double> weights;
};

/// Golub-Welsch: eigen-decomposition of the symmetric Jacobi matrix of the
/// physicists' Hermite recurrence.
inline GaussHermite gauss_hermite(int n) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    J(i, i - 1) = J(i - 1, i) = std::sqrt(i / 2.0);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  GaussHermite gh;
  for (int i = 0; i < n; ++i) {
    gh.nodes.push_back(es.eigenvalues()(i));
    const double v0 = es.eigenvectors()(0, i);
    gh.weights.push_back(std::sqrt(std::numbers::pi) * v0 * v0);
  }
  return gh;
}

/// E[f(Z)] for Z ~ N(0,1).
template <class F>
double expect_normal(const GaussHermite& gh, F f) {
  double s = 0;
  for (std::size_t i = 0; i < gh.nodes.size(); ++i) {
    s += gh.weights[i] * f(std::sqrt(2.0) * gh.nodes[i]);
  }
  return s / std::sqrt(std::numbers::pi);
}

/// Direct three-way logit, written out longhand.
inline std::array<double, 3> logit3(double vn, double vc) {
  const double m = std::max({0.0, vn, vc});
  const double a = std::exp(-m), b = std::exp(vn - m), c = std::exp(vc - m);
  const double s = a + b + c;
  return {a / s, b / s, c / s};
}

// ---------------------------------------------------------------- datasets

/// Dataset with an intercept and the given covariate columns on both sides.
inline volatix::ChoiceDataset make_choice_data(
    const std::vector<std::vector<double>>& x, const std::vector<volatix::Outcome>& y,
    const std::vector<std::string>& names) {
  volatix::ChoiceDataset d;
  d.crash_names = names;
  d.nearcrash_names = names;
  for (std::size_t i = 0; i < x.size(); ++i) {
    volatix::EventRecord e;
    e.event_id = "e" + std::to_string(i);
    e.observed = y[i];
    e.x_crash = x[i];
    e.x_nearcrash = x[i];
    d.events.push_back(e);
  }
  return d;
}

inline volatix::CoefficientLayout layout_of(const std::vector<std::string>& crash,
                                            const std::vector<std::string>& nearcrash,
                                            const std::vector<std::string>& random = {}) {
  volatix::CoefficientLayout l;
  auto is_random = [&](const std::string& n) {
    return std::find(random.begin(), random.end(), n) != random.end();
  };
  for (const auto& n : crash) l.crash.push_back({n, is_random("Crash:" + n)});
  for (const auto& n : nearcrash) l.nearcrash.push_back({n, is_random("NearCrash:" + n)});
  return l;
}

}  // namespace testsupport
