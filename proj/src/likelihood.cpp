#include "volatix/likelihood.hpp"

#include <algorithm>
#include <cmath>

#include "volatix/error.hpp"
#include "volatix/kernels.hpp"
#include "volatix/parallel.hpp"

namespace volatix {

ModelStructure::ModelStructure(const ModelSpec& spec)
    : spec_(spec), traits_(traits(spec.model_class)) {
  validate(spec_);
  n_crash_ = spec_.layout.crash.size();
  n_nearcrash_ = spec_.layout.nearcrash.size();
  if (traits_.random_coefficients) {
    for (std::size_t i = 0; i < n_crash_; ++i) {
      if (spec_.layout.crash[i].random) random_.push_back({Outcome::Crash, i});
    }
    for (std::size_t i = 0; i < n_nearcrash_; ++i) {
      if (spec_.layout.nearcrash[i].random) random_.push_back({Outcome::NearCrash, i});
    }
  }
}

std::vector<std::string> ModelStructure::parameter_names() const {
  std::vector<std::string> names;
  for (const auto& c : spec_.layout.crash) names.push_back("Crash:" + c.name);
  for (const auto& c : spec_.layout.nearcrash) names.push_back("NearCrash:" + c.name);
  for (const auto& r : random_) {
    const auto& side = r.side == Outcome::Crash ? spec_.layout.crash : spec_.layout.nearcrash;
    names.push_back("sd(" + std::string(to_string(r.side)) + ":" + side[r.index].name + ")");
  }
  for (const auto& z : spec_.scale_covariates) names.push_back("scale:" + z);
  if (has_scale()) names.emplace_back("tau");
  if (free_kappa()) names.emplace_back("kappa");
  return names;
}

Eigen::VectorXd ModelStructure::pack(const ParameterSet& p) const {
  validate(p, spec_);
  Eigen::VectorXd v(parameter_count());
  std::size_t j = 0;
  for (const double b : p.beta) v[j++] = b;
  for (const double w : p.omega_sd) v[j++] = w;
  for (const double t : p.theta) v[j++] = t;
  if (has_scale()) v[j++] = p.tau;
  if (free_kappa()) v[j++] = p.kappa;
  return v;
}

ParameterSet ModelStructure::unpack(const Eigen::VectorXd& natural) const {
  if (static_cast<std::size_t>(natural.size()) != parameter_count()) {
    throw InvalidParameter("parameter vector has wrong length");
  }
  ParameterSet p;
  std::size_t j = 0;
  p.beta.assign(natural.data(), natural.data() + omega_offset());
  j = omega_offset();
  p.omega_sd.assign(natural.data() + j, natural.data() + j + random_.size());
  j += random_.size();
  p.theta.assign(natural.data() + j, natural.data() + j + theta_size());
  j += theta_size();
  p.tau = has_scale() ? natural[j++] : 0.0;
  p.kappa = free_kappa() ? natural[j++] : traits_.fixed_kappa;
  return p;
}

namespace {

// Scratch arrays of length D, one set per worker chunk.
struct Workspace {
  std::vector<double> sigma, c, r_crash, r_nc, v_crash, v_nc, p_base, p_nc, p_crash, e_crash, e_nc,
      tmp;

  void resize(std::size_t d) {
    for (auto* v : {&sigma, &c, &r_crash, &r_nc, &v_crash, &v_nc, &p_base, &p_nc, &p_crash,
                    &e_crash, &e_nc, &tmp}) {
      v->assign(d, 0.0);
    }
  }
};

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (const double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Probabilities for one event; when grad is non-null, adds the score of
// ln P(observed) w.r.t. the natural parameters. Returns true on underflow.
bool evaluate_event(const ModelStructure& m, const ParameterSet& p, const EventRecord& e,
                    const EventDraws& dr, Workspace& ws, Probabilities& out, double* grad) {
  const std::size_t n_draws = dr.draws;
  if (dr.dims != draw_dimensions(m.spec())) {
    throw InvalidParameter("draw block dimensions do not match the model");
  }
  if (e.x_crash.size() != m.crash_size() || e.x_nearcrash.size() != m.nearcrash_size() ||
      e.z_scale.size() != m.theta_size()) {
    throw LayoutError("event " + e.event_id + ": covariates do not match the model layout");
  }
  if (ws.sigma.size() != n_draws) ws.resize(n_draws);

  const std::span<const double> beta_c(p.beta.data(), m.crash_size());
  const std::span<const double> beta_n(p.beta.data() + m.crash_size(), m.nearcrash_size());
  const double a_c = kernels::dot(beta_c, e.x_crash);
  const double a_n = kernels::dot(beta_n, e.x_nearcrash);

  const bool scaled = m.has_scale();
  const bool mixed = !m.random_slots().empty();
  const double kappa = p.kappa;
  std::span<const double> eps0;
  if (scaled) {
    eps0 = dr.column(dr.dims - 1);
    const double base = -0.5 * p.tau * p.tau + kernels::dot(p.theta, e.z_scale);
    for (std::size_t d = 0; d < n_draws; ++d) ws.sigma[d] = base + p.tau * eps0[d];
    kernels::exp_inplace(ws.sigma);
  } else {
    std::fill(ws.sigma.begin(), ws.sigma.end(), 1.0);
  }

  std::fill(ws.r_crash.begin(), ws.r_crash.end(), 0.0);
  std::fill(ws.r_nc.begin(), ws.r_nc.end(), 0.0);
  if (mixed) {
    const auto& slots = m.random_slots();
    for (std::size_t r = 0; r < slots.size(); ++r) {
      const bool crash = slots[r].side == Outcome::Crash;
      const double x = crash ? e.x_crash[slots[r].index] : e.x_nearcrash[slots[r].index];
      kernels::axpy(x * p.omega_sd[r], dr.column(r), crash ? ws.r_crash : ws.r_nc);
    }
    for (std::size_t d = 0; d < n_draws; ++d) ws.c[d] = kappa + (1.0 - kappa) * ws.sigma[d];
  } else {
    std::fill(ws.c.begin(), ws.c.end(), 1.0);
  }

  for (std::size_t d = 0; d < n_draws; ++d) {
    ws.v_crash[d] = ws.sigma[d] * a_c + ws.c[d] * ws.r_crash[d];
    ws.v_nc[d] = ws.sigma[d] * a_n + ws.c[d] * ws.r_nc[d];
  }
  kernels::softmax3(ws.v_nc, ws.v_crash, ws.p_base, ws.p_nc, ws.p_crash);
  out.baseline = mean_of(ws.p_base);
  out.nearcrash = mean_of(ws.p_nc);
  out.crash = mean_of(ws.p_crash);

  const double p_obs = out[e.observed];
  if (!(p_obs > kProbabilityFloor)) return true;
  if (grad == nullptr) return false;

  const std::vector<double>& py = e.observed == Outcome::Crash
                                      ? ws.p_crash
                                      : (e.observed == Outcome::NearCrash ? ws.p_nc : ws.p_base);
  const double inv_sum = 1.0 / (p_obs * static_cast<double>(n_draws));
  const double dc = e.observed == Outcome::Crash ? 1.0 : 0.0;
  const double dn = e.observed == Outcome::NearCrash ? 1.0 : 0.0;
  for (std::size_t d = 0; d < n_draws; ++d) {
    const double w = py[d] * inv_sum;
    ws.e_crash[d] = w * (dc - ws.p_crash[d]);
    ws.e_nc[d] = w * (dn - ws.p_nc[d]);
  }

  // beta: dV_k/dbeta_km = sigma * x_km
  const double ec_sigma = kernels::dot(ws.e_crash, ws.sigma);
  const double en_sigma = kernels::dot(ws.e_nc, ws.sigma);
  for (std::size_t j = 0; j < m.crash_size(); ++j) grad[j] += e.x_crash[j] * ec_sigma;
  for (std::size_t j = 0; j < m.nearcrash_size(); ++j) {
    grad[m.crash_size() + j] += e.x_nearcrash[j] * en_sigma;
  }

  if (mixed) {
    // omega_r: dV_k/domega_r = c * x_kr * u_r
    const auto& slots = m.random_slots();
    for (std::size_t r = 0; r < slots.size(); ++r) {
      const bool crash = slots[r].side == Outcome::Crash;
      const auto& ek = crash ? ws.e_crash : ws.e_nc;
      for (std::size_t d = 0; d < n_draws; ++d) ws.tmp[d] = ek[d] * ws.c[d];
      const double x = crash ? e.x_crash[slots[r].index] : e.x_nearcrash[slots[r].index];
      grad[m.omega_offset() + r] += x * kernels::dot(ws.tmp, dr.column(r));
    }
  }

  if (scaled) {
    // dV_k/dsigma = a_k + (1-kappa) R_k ; dsigma/dtheta = sigma z ; dsigma/dtau = sigma (eps0 - tau)
    const double lam = mixed ? 1.0 - kappa : 0.0;
    double s_total = 0.0;
    double s_tau = 0.0;
    for (std::size_t d = 0; d < n_draws; ++d) {
      const double s = ws.sigma[d] * (ws.e_crash[d] * (a_c + lam * ws.r_crash[d]) +
                                      ws.e_nc[d] * (a_n + lam * ws.r_nc[d]));
      s_total += s;
      s_tau += s * (eps0[d] - p.tau);
    }
    for (std::size_t j = 0; j < m.theta_size(); ++j) {
      grad[m.theta_offset() + j] += e.z_scale[j] * s_total;
    }
    grad[m.tau_offset()] += s_tau;
    if (m.free_kappa()) {
      double s_kappa = 0.0;
      for (std::size_t d = 0; d < n_draws; ++d) {
        s_kappa += (1.0 - ws.sigma[d]) * (ws.e_crash[d] * ws.r_crash[d] + ws.e_nc[d] * ws.r_nc[d]);
      }
      grad[m.kappa_offset()] += s_kappa;
    }
  }
  return false;
}

void check_draws(const ModelStructure& model, const ChoiceDataset& data, const DrawBlock& draws) {
  if (draws.events() != data.size()) {
    throw InvalidParameter("draw block covers a different number of events than the data");
  }
  if (draws.dims() != draw_dimensions(model.spec())) {
    throw InvalidParameter("draw block dimensions do not match the model");
  }
}

}  // namespace

Probabilities simulated_probability(const ModelStructure& model, const ParameterSet& params,
                                    const EventRecord& event, const EventDraws& draws) {
  validate(params, model.spec());
  Workspace ws;
  Probabilities out;
  evaluate_event(model, params, event, draws, ws, out, nullptr);
  return out;
}

LikelihoodValue detail::log_likelihood_unchecked(const ModelStructure& model,
                                                 const ParameterSet& params,
                                                 const ChoiceDataset& data,
                                                 const DrawBlock& draws, bool with_gradient) {
  check_draws(model, data, draws);
  const std::size_t k = model.parameter_count();
  const std::size_t n_chunks = (data.size() + kEventChunk - 1) / kEventChunk;
  std::vector<LikelihoodValue> parts(n_chunks);

  parallel_for(n_chunks, [&](std::size_t chunk) {
    LikelihoodValue& part = parts[chunk];
    if (with_gradient) part.gradient = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
    Workspace ws;
    Probabilities prob;
    const std::size_t lo = chunk * kEventChunk;
    const std::size_t hi = std::min(data.size(), lo + kEventChunk);
    for (std::size_t i = lo; i < hi; ++i) {
      const bool under = evaluate_event(model, params, data.events[i], draws.event(i), ws, prob,
                                        with_gradient ? part.gradient.data() : nullptr);
      if (under) {
        ++part.underflows;
        part.loglik += std::log(kProbabilityFloor);
      } else {
        part.loglik += std::log(prob[data.events[i].observed]);
      }
    }
  });

  LikelihoodValue total = tree_reduce(std::move(parts), [](LikelihoodValue& a, const LikelihoodValue& b) {
    a.loglik += b.loglik;
    a.underflows += b.underflows;
    if (b.gradient.size() > 0) a.gradient += b.gradient;
  });
  if (with_gradient && total.gradient.size() == 0) {
    total.gradient = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
  }
  return total;
}

LikelihoodValue log_likelihood(const ModelStructure& model, const ParameterSet& params,
                               const ChoiceDataset& data, const DrawBlock& draws,
                               bool with_gradient) {
  validate(params, model.spec());
  return detail::log_likelihood_unchecked(model, params, data, draws, with_gradient);
}

double log_likelihood(const ModelSpec& spec, const ParameterSet& params, const ChoiceDataset& data,
                      const DrawBlock& draws) {
  return log_likelihood(ModelStructure(spec), params, data, draws, false).loglik;
}

Eigen::MatrixXd event_scores(const ModelStructure& model, const ParameterSet& params,
                             const ChoiceDataset& data, const DrawBlock& draws) {
  validate(params, model.spec());
  check_draws(model, data, draws);
  const auto k = static_cast<Eigen::Index>(model.parameter_count());
  // Row-major so each event writes a contiguous row.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> scores =
      Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(data.size()), k);
  const std::size_t n_chunks = (data.size() + kEventChunk - 1) / kEventChunk;
  parallel_for(n_chunks, [&](std::size_t chunk) {
    Workspace ws;
    Probabilities prob;
    const std::size_t lo = chunk * kEventChunk;
    const std::size_t hi = std::min(data.size(), lo + kEventChunk);
    for (std::size_t i = lo; i < hi; ++i) {
      evaluate_event(model, params, data.events[i], draws.event(i), ws, prob,
                     scores.row(static_cast<Eigen::Index>(i)).data());
    }
  });
  return scores;
}

}  // namespace volatix
