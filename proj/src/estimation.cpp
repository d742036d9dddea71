#include "volatix/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "volatix/error.hpp"
#include "volatix/optimizer.hpp"
#include "volatix/random.hpp"

namespace volatix {

InformationCriteria information_criteria(double loglik, double loglik_null, std::size_t k) {
  if (k < 1) throw InvalidParameter("information_criteria: k must be at least 1");
  if (loglik_null == 0.0) throw InvalidParameter("information_criteria: null log-likelihood is 0");
  return {2.0 * static_cast<double>(k) - 2.0 * loglik, 1.0 - loglik / loglik_null};
}

double null_log_likelihood(const ChoiceDataset& data) {
  const auto counts = data.outcome_counts();
  const double n = static_cast<double>(data.size());
  double ll = 0.0;
  for (const std::size_t c : counts) {
    if (c > 0) ll += static_cast<double>(c) * std::log(static_cast<double>(c) / n);
  }
  return ll;
}

namespace {

// First column that is (numerically) a combination of the columns before it.
std::optional<std::size_t> first_dependent_column(const Eigen::MatrixXd& x) {
  for (Eigen::Index j = 1; j <= x.cols(); ++j) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x.leftCols(j));
    qr.setThreshold(1e-10);
    if (qr.rank() < j) return static_cast<std::size_t>(j - 1);
  }
  return std::nullopt;
}

void check_block(const ChoiceDataset& data, const std::vector<std::string>& names,
                 const std::function<const std::vector<double>&(const EventRecord&)>& pick,
                 bool prepend_constant, const std::string& label) {
  const auto n = static_cast<Eigen::Index>(data.size());
  const Eigen::Index offset = prepend_constant ? 1 : 0;
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(names.size()) + offset);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& v = pick(data.events[static_cast<std::size_t>(i)]);
    if (prepend_constant) x(i, 0) = 1.0;
    for (std::size_t j = 0; j < v.size(); ++j) x(i, static_cast<Eigen::Index>(j) + offset) = v[j];
  }
  if (const auto bad = first_dependent_column(x)) {
    const std::string name = *bad < static_cast<std::size_t>(offset)
                                 ? std::string(kConstant)
                                 : names[*bad - static_cast<std::size_t>(offset)];
    throw CollinearCovariate("covariate '" + name + "' in the " + label +
                             " block is constant or collinear with earlier columns");
  }
}

}  // namespace

void check_identification(const ModelSpec& spec, const ChoiceDataset& data) {
  (void)spec;
  if (data.size() == 0) throw InvalidParameter("empty dataset");
  check_block(data, data.crash_names, [](const EventRecord& e) -> const auto& { return e.x_crash; },
              false, "crash");
  check_block(data, data.nearcrash_names,
              [](const EventRecord& e) -> const auto& { return e.x_nearcrash; }, false,
              "near-crash");
  if (!data.scale_names.empty()) {
    check_block(data, data.scale_names,
                [](const EventRecord& e) -> const auto& { return e.z_scale; }, true, "scale");
  }
}

std::string_view to_string(CovarianceMethod m) noexcept {
  switch (m) {
    case CovarianceMethod::Hessian: return "hessian";
    case CovarianceMethod::Bhhh: return "bhhh";
    case CovarianceMethod::Robust: return "robust";
  }
  return "hessian";
}

namespace {

// Inverts a symmetric information matrix if it is comfortably positive definite.
std::optional<Eigen::MatrixXd> invert_information(const Eigen::MatrixXd& info, std::string& note) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info);
  if (eig.info() != Eigen::Success) {
    note = "eigen-decomposition failed";
    return std::nullopt;
  }
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) {
    note = "information matrix is not positive definite";
    return std::nullopt;
  }
  if (hi / lo > 1e12) {
    note = "information matrix is numerically singular";
    return std::nullopt;
  }
  const Eigen::MatrixXd& v = eig.eigenvectors();
  return v * eig.eigenvalues().cwiseInverse().asDiagonal() * v.transpose();
}

Covariance make_covariance(CovarianceMethod method, std::optional<Eigen::MatrixXd> vcov,
                           std::string note) {
  Covariance c;
  c.method = method;
  c.note = std::move(note);
  if (vcov) {
    c.available = true;
    c.vcov = std::move(*vcov);
    c.se = c.vcov.diagonal().cwiseMax(0.0).cwiseSqrt();
  }
  return c;
}

}  // namespace

StandardErrors standard_errors(const ModelStructure& model, const ParameterSet& estimates,
                               const ChoiceDataset& data, const DrawBlock& draws) {
  validate(estimates, model.spec());
  const Eigen::VectorXd x = model.pack(estimates);
  const Eigen::Index k = x.size();

  // Numerical Hessian from the analytic score.
  Eigen::MatrixXd hess(k, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double h = 1e-5 * std::max(1.0, std::abs(x[j]));
    Eigen::VectorXd xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    const auto gp =
        detail::log_likelihood_unchecked(model, model.unpack(xp), data, draws, true).gradient;
    const auto gm =
        detail::log_likelihood_unchecked(model, model.unpack(xm), data, draws, true).gradient;
    hess.col(j) = (gp - gm) / (2.0 * h);
  }
  const Eigen::MatrixXd info = -0.5 * (hess + hess.transpose());

  const Eigen::MatrixXd scores = event_scores(model, estimates, data, draws);
  const Eigen::MatrixXd opg = scores.transpose() * scores;

  StandardErrors out;
  std::string note;
  const double ll = log_likelihood(model, estimates, data, draws).loglik;
  // Fitted probabilities of the observed outcomes all ~1: the MLE is at
  // infinity and no covariance estimate is meaningful.
  if (ll > -1e-3) {
    note = "perfect prediction (separated data)";
    out.hessian = make_covariance(CovarianceMethod::Hessian, std::nullopt, note);
    out.bhhh = make_covariance(CovarianceMethod::Bhhh, std::nullopt, note);
    out.robust = make_covariance(CovarianceMethod::Robust, std::nullopt, note);
    return out;
  }

  auto h_inv = invert_information(info, note);
  out.hessian = make_covariance(CovarianceMethod::Hessian, h_inv, note);
  std::string bnote;
  out.bhhh = make_covariance(CovarianceMethod::Bhhh, invert_information(opg, bnote), bnote);
  if (h_inv) {
    out.robust = make_covariance(CovarianceMethod::Robust,
                                 Eigen::MatrixXd((*h_inv) * opg * (*h_inv)), "");
  } else {
    out.robust = make_covariance(CovarianceMethod::Robust, std::nullopt, note);
    out.fell_back = true;
  }
  return out;
}

namespace {

// Maps between the optimizer's unconstrained vector and natural parameters.
struct FreeMap {
  const ModelStructure& model;

  Eigen::VectorXd natural(const Eigen::VectorXd& free) const {
    Eigen::VectorXd nat = free;
    for (std::size_t r = 0; r < model.random_slots().size(); ++r) {
      const auto j = static_cast<Eigen::Index>(model.omega_offset() + r);
      nat[j] = std::abs(free[j]);
    }
    if (model.has_scale()) {
      const auto j = static_cast<Eigen::Index>(model.tau_offset());
      nat[j] = std::exp(free[j]);
    }
    if (model.free_kappa()) {
      const auto j = static_cast<Eigen::Index>(model.kappa_offset());
      nat[j] = 1.0 / (1.0 + std::exp(-free[j]));
    }
    return nat;
  }

  /// d natural / d free, elementwise.
  Eigen::VectorXd jacobian(const Eigen::VectorXd& free) const {
    Eigen::VectorXd jac = Eigen::VectorXd::Ones(free.size());
    for (std::size_t r = 0; r < model.random_slots().size(); ++r) {
      const auto j = static_cast<Eigen::Index>(model.omega_offset() + r);
      jac[j] = free[j] < 0.0 ? -1.0 : 1.0;
    }
    if (model.has_scale()) {
      const auto j = static_cast<Eigen::Index>(model.tau_offset());
      jac[j] = std::exp(free[j]);
    }
    if (model.free_kappa()) {
      const auto j = static_cast<Eigen::Index>(model.kappa_offset());
      const double k = 1.0 / (1.0 + std::exp(-free[j]));
      jac[j] = k * (1.0 - k);
    }
    return jac;
  }

  Eigen::VectorXd free(const Eigen::VectorXd& natural) const {
    Eigen::VectorXd f = natural;
    if (model.has_scale()) {
      const auto j = static_cast<Eigen::Index>(model.tau_offset());
      f[j] = std::log(std::max(natural[j], 1e-4));
    }
    if (model.free_kappa()) {
      const auto j = static_cast<Eigen::Index>(model.kappa_offset());
      const double k = std::clamp(natural[j], 1e-6, 1.0 - 1e-6);
      f[j] = std::log(k / (1.0 - k));
    }
    return f;
  }
};

// Per-column divisors used when standardizing (1 for constants).
struct Scaling {
  std::vector<double> crash, nearcrash, scale;
};

Scaling column_scaling(const ChoiceDataset& data) {
  const auto sd_of = [&](auto pick, std::size_t j, bool is_const) {
    if (is_const) return 1.0;
    double mean = 0.0;
    for (const auto& e : data.events) mean += pick(e)[j];
    mean /= static_cast<double>(data.size());
    double ss = 0.0;
    for (const auto& e : data.events) ss += (pick(e)[j] - mean) * (pick(e)[j] - mean);
    const double sd = std::sqrt(ss / std::max<double>(1.0, static_cast<double>(data.size()) - 1));
    return sd > 0.0 ? sd : 1.0;
  };
  Scaling s;
  for (std::size_t j = 0; j < data.crash_names.size(); ++j) {
    s.crash.push_back(sd_of([](const EventRecord& e) -> const auto& { return e.x_crash; }, j,
                            data.crash_names[j] == kConstant));
  }
  for (std::size_t j = 0; j < data.nearcrash_names.size(); ++j) {
    s.nearcrash.push_back(sd_of([](const EventRecord& e) -> const auto& { return e.x_nearcrash; },
                                j, data.nearcrash_names[j] == kConstant));
  }
  for (std::size_t j = 0; j < data.scale_names.size(); ++j) {
    s.scale.push_back(
        sd_of([](const EventRecord& e) -> const auto& { return e.z_scale; }, j, false));
  }
  return s;
}

ChoiceDataset apply_scaling(ChoiceDataset data, const Scaling& s) {
  for (auto& e : data.events) {
    for (std::size_t j = 0; j < e.x_crash.size(); ++j) e.x_crash[j] /= s.crash[j];
    for (std::size_t j = 0; j < e.x_nearcrash.size(); ++j) e.x_nearcrash[j] /= s.nearcrash[j];
    for (std::size_t j = 0; j < e.z_scale.size(); ++j) e.z_scale[j] /= s.scale[j];
  }
  return data;
}

/// Coefficients on x/s are s times the original ones; divide them back.
Eigen::VectorXd unscale(const ModelStructure& model, Eigen::VectorXd nat, const Scaling& s) {
  for (std::size_t j = 0; j < model.crash_size(); ++j) nat[static_cast<Eigen::Index>(j)] /= s.crash[j];
  for (std::size_t j = 0; j < model.nearcrash_size(); ++j) {
    nat[static_cast<Eigen::Index>(model.crash_size() + j)] /= s.nearcrash[j];
  }
  const auto& slots = model.random_slots();
  for (std::size_t r = 0; r < slots.size(); ++r) {
    const double sc = slots[r].side == Outcome::Crash ? s.crash[slots[r].index]
                                                      : s.nearcrash[slots[r].index];
    nat[static_cast<Eigen::Index>(model.omega_offset() + r)] /= sc;
  }
  for (std::size_t j = 0; j < model.theta_size(); ++j) {
    nat[static_cast<Eigen::Index>(model.theta_offset() + j)] /= s.scale[j];
  }
  return nat;
}

Eigen::VectorXd rescale(const ModelStructure& model, Eigen::VectorXd nat, const Scaling& s) {
  Scaling inv = s;
  for (auto* v : {&inv.crash, &inv.nearcrash, &inv.scale}) {
    for (double& x : *v) x = 1.0 / x;
  }
  return unscale(model, std::move(nat), inv);
}

ModelSpec mnl_counterpart(const ModelSpec& spec) {
  ModelSpec m = spec;
  m.model_class = ModelClass::MNL;
  m.scale_covariates.clear();
  for (auto* side : {&m.layout.crash, &m.layout.nearcrash}) {
    for (auto& c : *side) c.random = false;
  }
  return m;
}

ChoiceDataset without_scale(const ChoiceDataset& data) {
  ChoiceDataset d = data;
  d.scale_names.clear();
  for (auto& e : d.events) e.z_scale.clear();
  return d;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

FitResult fit(const ModelSpec& spec, const ChoiceDataset& data, const FitOptions& options) {
  validate(spec);
  data.validate();
  const ModelStructure model(spec);
  {
    std::vector<std::string> crash, nc;
    for (const auto& c : spec.layout.crash) crash.push_back(c.name);
    for (const auto& c : spec.layout.nearcrash) nc.push_back(c.name);
    if (crash != data.crash_names || nc != data.nearcrash_names ||
        spec.scale_covariates != data.scale_names) {
      throw LayoutError("dataset columns do not match the model layout");
    }
  }
  const auto counts = data.outcome_counts();
  for (std::size_t j = 0; j < kOutcomeCount; ++j) {
    if (counts[j] == 0) {
      throw InvalidParameter("no events observed for outcome " +
                             std::string(to_string(kOutcomes[j])));
    }
  }
  check_identification(spec, data);

  const Scaling scaling = options.standardize ? column_scaling(data) : Scaling{};
  const ChoiceDataset scaled = options.standardize ? apply_scaling(data, scaling) : ChoiceDataset{};
  const ChoiceDataset& work = options.standardize ? scaled : data;

  const DrawBlock draws = make_draws(spec, data.size());
  const double n = static_cast<double>(data.size());
  const FreeMap map{model};

  const Objective objective = [&](const Eigen::VectorXd& free, Eigen::VectorXd* grad) {
    const Eigen::VectorXd nat = map.natural(free);
    if (!nat.allFinite()) return std::numeric_limits<double>::infinity();
    const auto lv = detail::log_likelihood_unchecked(model, model.unpack(nat), work, draws,
                                                     grad != nullptr);
    if (grad) *grad = -(lv.gradient.cwiseProduct(map.jacobian(free))) / n;
    return -lv.loglik / n;
  };

  // Starting points, natural parameterization, in the (possibly scaled) space.
  std::vector<Eigen::VectorXd> starts;
  const auto t = traits(spec.model_class);
  if (spec.model_class == ModelClass::MNL) {
    starts.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.parameter_count())));
  } else {
    FitOptions mnl_options;
    mnl_options.max_iterations = options.max_iterations;
    mnl_options.gradient_tolerance = options.gradient_tolerance;
    mnl_options.standardize = options.standardize;
    const FitResult mnl = data.scale_names.empty()
                              ? fit(mnl_counterpart(spec), data, mnl_options)
                              : fit(mnl_counterpart(spec), without_scale(data), mnl_options);
    ParameterSet p0 = zero_parameters(spec);
    p0.beta = mnl.estimates.beta;
    std::fill(p0.omega_sd.begin(), p0.omega_sd.end(), 0.5);
    if (t.scale) p0.tau = 0.5;
    Eigen::VectorXd v = model.pack(p0);
    starts.push_back(options.standardize ? rescale(model, v, scaling) : v);
  }
  for (const auto& extra : options.extra_starts) {
    const Eigen::VectorXd v = model.pack(extra);
    starts.push_back(options.standardize ? rescale(model, v, scaling) : v);
  }
  const bool gmnl = t.random_coefficients && t.scale;
  const std::size_t n_random_starts = options.starts > 0 ? options.starts : (gmnl ? 3 : 1);
  const Eigen::VectorXd anchor = starts.front();
  for (std::size_t s = 1; s < n_random_starts; ++s) {
    Rng rng(derive_seed(spec.seed, "multistart", s));
    Eigen::VectorXd v = anchor;
    for (std::size_t j = 0; j < model.omega_offset(); ++j) {
      v[static_cast<Eigen::Index>(j)] *= 1.0 + 0.2 * rng.normal();
    }
    for (std::size_t r = 0; r < model.random_slots().size(); ++r) {
      v[static_cast<Eigen::Index>(model.omega_offset() + r)] = rng.uniform(0.1, 1.0);
    }
    if (model.has_scale()) v[static_cast<Eigen::Index>(model.tau_offset())] = rng.uniform(0.2, 1.0);
    if (model.free_kappa()) {
      v[static_cast<Eigen::Index>(model.kappa_offset())] = rng.uniform(0.05, 0.95);
    }
    starts.push_back(v);
  }

  FitResult result;
  OptimizerResult best;
  double best_ll = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < starts.size(); ++s) {
    OptimizerOptions oo;
    oo.max_iterations = options.max_iterations;
    oo.gradient_tolerance = options.gradient_tolerance;
    if (options.log) {
      oo.on_iteration = [&, s](std::size_t iter, double value, double gnorm) {
        options.log(std::string(to_string(spec.model_class)) + " start " + std::to_string(s) +
                    " iter " + std::to_string(iter) + " loglik " + format_double(-value * n) +
                    " |grad| " + format_double(gnorm));
      };
    }
    OptimizerResult r = minimize_bfgs(objective, map.free(starts[s]), oo);
    const double ll = -r.value * n;
    result.start_logliks.push_back(ll);
    if (ll > best_ll) {
      best_ll = ll;
      best = std::move(r);
      result.best_start = s;
    }
  }

  Eigen::VectorXd nat = map.natural(best.x);
  if (options.standardize) nat = unscale(model, nat, scaling);
  result.spec = spec;
  result.estimates = model.unpack(nat);
  result.parameter_names = model.parameter_names();
  result.estimate_vector = nat;
  result.parameter_count = model.parameter_count();
  result.n_events = data.size();
  result.converged = best.converged;
  result.iterations = best.iterations;
  result.gradient_norm = best.gradient_norm;
  for (const double v : best.trace) result.loglik_trace.push_back(-v * n);

  const auto lv = log_likelihood(model, result.estimates, data, draws);
  result.loglik = lv.loglik;
  result.underflows = lv.underflows;
  result.loglik_null = null_log_likelihood(data);
  const auto ic = information_criteria(result.loglik, result.loglik_null, result.parameter_count);
  result.aic = ic.aic;
  result.pseudo_r2 = ic.pseudo_r2;

  result.errors = standard_errors(model, result.estimates, data, draws);
  if (!result.converged) {
    result.warnings.push_back("optimizer did not converge after " +
                              std::to_string(result.iterations) + " iterations");
  }
  if (result.underflows > 0) {
    result.warnings.push_back(std::to_string(result.underflows) +
                              " event probabilities clamped at the underflow floor");
  }
  if (result.errors.fell_back) {
    result.warnings.push_back("Hessian unusable (" + result.errors.hessian.note +
                              "); BHHH covariance reported");
  }
  if (!result.errors.available()) {
    result.warnings.push_back("standard errors unavailable: " + result.errors.preferred().note);
  }
  return result;
}

}  // namespace volatix
