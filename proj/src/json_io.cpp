#include "volatix/json_io.hpp"

#include <cmath>
#include <fstream>

#include "volatix/error.hpp"

namespace volatix::json_io {

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number_or_null(v[i]));
  return a;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(number_or_null(m(i, j)));
    a.push_back(row);
  }
  return a;
}

json coefficients_json(const std::vector<Coefficient>& cs) {
  json a = json::array();
  for (const auto& c : cs) a.push_back({{"name", c.name}, {"random", c.random}});
  return a;
}

std::vector<Coefficient> coefficients_from(const json& j) {
  std::vector<Coefficient> out;
  for (const auto& c : j) {
    if (c.is_string()) {
      out.push_back({c.get<std::string>(), false});
    } else {
      out.push_back({c.at("name").get<std::string>(), c.value("random", false)});
    }
  }
  return out;
}

std::string outcome_key(Outcome o) {
  switch (o) {
    case Outcome::Baseline: return "baseline";
    case Outcome::NearCrash: return "nearcrash";
    case Outcome::Crash: return "crash";
  }
  return "baseline";
}

json covariance_json(const Covariance& c) {
  json j = {{"method", std::string(to_string(c.method))}, {"available", c.available}};
  if (!c.note.empty()) j["note"] = c.note;
  if (c.available) j["se"] = vector_json(c.se);
  return j;
}

}  // namespace

json to_json(const ModelSpec& spec) {
  return {{"class", std::string(to_string(spec.model_class))},
          {"coefficients",
           {{"crash", coefficients_json(spec.layout.crash)},
            {"nearcrash", coefficients_json(spec.layout.nearcrash)}}},
          {"scale_covariates", spec.scale_covariates},
          {"draws", spec.draws},
          {"draw_scheme", std::string(to_string(spec.scheme))},
          {"halton_burn", spec.halton_burn},
          {"seed", spec.seed}};
}

ModelSpec spec_from_json(const json& j) {
  try {
    ModelSpec s;
    const auto cls = parse_model_class(j.at("class").get<std::string>());
    if (!cls) throw InvalidParameter("unknown model class: " + j.at("class").get<std::string>());
    s.model_class = *cls;
    s.layout.crash = coefficients_from(j.at("coefficients").at("crash"));
    s.layout.nearcrash = coefficients_from(j.at("coefficients").at("nearcrash"));
    s.scale_covariates = j.value("scale_covariates", std::vector<std::string>{});
    const auto draws = j.value("draws", static_cast<long long>(500));
    if (draws < 1) throw InvalidParameter("draws must be at least 1");
    s.draws = static_cast<std::size_t>(draws);
    const auto scheme = parse_draw_scheme(j.value("draw_scheme", std::string("halton")));
    if (!scheme) throw InvalidParameter("unknown draw scheme");
    s.scheme = *scheme;
    s.halton_burn = j.value("halton_burn", static_cast<std::size_t>(50));
    s.seed = j.value("seed", static_cast<std::uint64_t>(1));
    validate(s);
    return s;
  } catch (const json::exception& e) {
    throw InvalidParameter(std::string("malformed model spec: ") + e.what());
  }
}

json to_json(const ParameterSet& p) {
  return {{"beta", p.beta},   {"omega_sd", p.omega_sd}, {"theta", p.theta},
          {"tau", p.tau},     {"kappa", p.kappa}};
}

ParameterSet parameters_from_json(const json& j) {
  try {
    ParameterSet p;
    p.beta = j.at("beta").get<std::vector<double>>();
    p.omega_sd = j.value("omega_sd", std::vector<double>{});
    p.theta = j.value("theta", std::vector<double>{});
    p.tau = j.value("tau", 0.0);
    p.kappa = j.value("kappa", 1.0);
    return p;
  } catch (const json::exception& e) {
    throw InvalidParameter(std::string("malformed parameter set: ") + e.what());
  }
}

json to_json(const FitResult& fit) {
  const auto& cov = fit.errors.preferred();
  json params = json::array();
  for (std::size_t i = 0; i < fit.parameter_names.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double est = fit.estimate_vector[ii];
    const double se = cov.available ? cov.se[ii] : std::nan("");
    params.push_back({{"name", fit.parameter_names[i]},
                      {"estimate", est},
                      {"se", number_or_null(se)},
                      {"z", number_or_null(se > 0 ? est / se : std::nan(""))}});
  }
  return {{"tool", "volatix"},
          {"version", VOLATIX_VERSION},
          {"spec", to_json(fit.spec)},
          {"parameters", params},
          {"estimates", to_json(fit.estimates)},
          {"se_available", cov.available},
          {"vcov_method", std::string(to_string(cov.method))},
          {"vcov", cov.available ? matrix_json(cov.vcov) : json(nullptr)},
          {"covariance",
           {covariance_json(fit.errors.hessian), covariance_json(fit.errors.bhhh),
            covariance_json(fit.errors.robust)}},
          {"loglik", fit.loglik},
          {"loglik_null", fit.loglik_null},
          {"aic", fit.aic},
          {"pseudo_r2", fit.pseudo_r2},
          {"n_parameters", fit.parameter_count},
          {"n_events", fit.n_events},
          {"converged", fit.converged},
          {"iterations", fit.iterations},
          {"gradient_norm", fit.gradient_norm},
          {"underflows", fit.underflows},
          {"seed", fit.spec.seed},
          {"draw_config",
           {{"draws", effective_draws(fit.spec)},
            {"scheme", std::string(to_string(fit.spec.scheme))},
            {"halton_burn", fit.spec.halton_burn},
            {"dimensions", draw_dimensions(fit.spec)}}},
          {"start_logliks", fit.start_logliks},
          {"best_start", fit.best_start},
          {"convergence_log", fit.loglik_trace},
          {"warnings", fit.warnings}};
}

FitResult fit_from_json(const json& j) {
  try {
    FitResult f;
    f.spec = spec_from_json(j.at("spec"));
    f.estimates = parameters_from_json(j.at("estimates"));
    validate(f.estimates, f.spec);
    const ModelStructure model(f.spec);
    f.parameter_names = model.parameter_names();
    f.estimate_vector = model.pack(f.estimates);
    f.parameter_count = model.parameter_count();
    f.loglik = j.value("loglik", 0.0);
    f.loglik_null = j.value("loglik_null", 0.0);
    f.aic = j.value("aic", 0.0);
    f.pseudo_r2 = j.value("pseudo_r2", 0.0);
    f.n_events = j.value("n_events", static_cast<std::size_t>(0));
    f.converged = j.value("converged", false);
    f.iterations = j.value("iterations", static_cast<std::size_t>(0));
    f.gradient_norm = j.value("gradient_norm", 0.0);
    f.warnings = j.value("warnings", std::vector<std::string>{});
    return f;
  } catch (const json::exception& e) {
    throw InvalidParameter(std::string("malformed fit result: ") + e.what());
  }
}

GeneratorConfig generator_from_json(const json& j) {
  try {
    GeneratorConfig g;
    g.spec = spec_from_json(j.at("spec"));
    g.truth = parameters_from_json(j.at("truth"));
    g.n_events = j.at("n_events").get<std::size_t>();
    g.seed = j.value("seed", static_cast<std::uint64_t>(1));
    for (const auto& c : j.at("covariates")) {
      CovariateDistribution d;
      d.name = c.at("name").get<std::string>();
      const auto kind = c.at("distribution").get<std::string>();
      if (kind == "normal") {
        d.kind = Distribution::Normal;
        d.a = c.value("mean", 0.0);
        d.b = c.value("sd", 1.0);
      } else if (kind == "bernoulli") {
        d.kind = Distribution::Bernoulli;
        d.a = c.value("p", 0.5);
      } else if (kind == "uniform") {
        d.kind = Distribution::Uniform;
        d.a = c.value("lower", 0.0);
        d.b = c.value("upper", 1.0);
      } else {
        throw InvalidParameter("unknown distribution '" + kind + "' for " + d.name);
      }
      g.covariates.push_back(d);
    }
    return g;
  } catch (const json::exception& e) {
    throw InvalidParameter(std::string("malformed generator config: ") + e.what());
  }
}

json to_json(const MarginalEffectTable& table) {
  json rows = json::array();
  for (const auto& r : table.rows) {
    json effects;
    for (const auto o : kOutcomes) effects[outcome_key(o)] = r.effect[static_cast<std::size_t>(o)];
    rows.push_back({{"covariate", r.covariate},
                    {"type", r.discrete ? "discrete" : "continuous"},
                    {"effects", effects}});
  }
  return {{"marginal_effects", rows}};
}

json to_json(const ProbabilityCurve& curve) {
  json points = json::array();
  for (std::size_t i = 0; i < curve.grid.size(); ++i) {
    json p = {{"grid_value", curve.grid[i]}};
    for (const auto o : kOutcomes) p[outcome_key(o)] = curve.mean_probability[i][o];
    points.push_back(p);
  }
  return {{"covariate", curve.covariate}, {"points", points}, {"warnings", curve.warnings}};
}

json to_json(const std::vector<ScenarioResult>& scenarios) {
  json rows = json::array();
  for (const auto& s : scenarios) {
    json share, count, dshare, dcount;
    for (const auto o : kOutcomes) {
      const auto k = static_cast<std::size_t>(o);
      share[outcome_key(o)] = s.share_pct[k];
      count[outcome_key(o)] = s.count[k];
      dshare[outcome_key(o)] = s.delta_share_pct[k];
      dcount[outcome_key(o)] = s.delta_count[k];
    }
    rows.push_back({{"scenario", s.label},
                    {"share_pct", share},
                    {"count", count},
                    {"delta_share_pct", dshare},
                    {"delta_count", dcount}});
  }
  return {{"scenarios", rows}};
}

json read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw SchemaError(path + ": invalid JSON: " + e.what());
  }
}

}  // namespace volatix::json_io
