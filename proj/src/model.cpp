#include "volatix/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "volatix/error.hpp"
#include "volatix/kernels.hpp"

namespace volatix {

namespace {

std::string normalize_key(std::string_view s) {
  std::string key;
  for (const char c : s) {
    if (c == '-' || c == '_' || c == ' ') continue;
    key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return key;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

std::string_view to_string(Outcome o) noexcept {
  switch (o) {
    case Outcome::Baseline: return "Baseline";
    case Outcome::NearCrash: return "NearCrash";
    case Outcome::Crash: return "Crash";
  }
  return "Baseline";
}

std::optional<Outcome> parse_outcome(std::string_view s) noexcept {
  const auto key = normalize_key(s);
  if (key == "baseline" || key == "0") return Outcome::Baseline;
  if (key == "nearcrash" || key == "1") return Outcome::NearCrash;
  if (key == "crash" || key == "2") return Outcome::Crash;
  return std::nullopt;
}

std::string_view to_string(ModelClass c) noexcept {
  switch (c) {
    case ModelClass::MNL: return "MNL";
    case ModelClass::RP_MNL: return "RP-MNL";
    case ModelClass::S_MNL: return "S-MNL";
    case ModelClass::HS_MNL: return "HS-MNL";
    case ModelClass::GMNL_I: return "GMNL-I";
    case ModelClass::GMNL_II: return "GMNL-II";
    case ModelClass::H_GMNL: return "H-GMNL";
  }
  return "MNL";
}

std::optional<ModelClass> parse_model_class(std::string_view s) noexcept {
  const auto key = normalize_key(s);
  if (key == "mnl") return ModelClass::MNL;
  if (key == "rpmnl") return ModelClass::RP_MNL;
  if (key == "smnl") return ModelClass::S_MNL;
  if (key == "hsmnl") return ModelClass::HS_MNL;
  if (key == "gmnli" || key == "gmnl1") return ModelClass::GMNL_I;
  if (key == "gmnlii" || key == "gmnl2") return ModelClass::GMNL_II;
  if (key == "hgmnl") return ModelClass::H_GMNL;
  return std::nullopt;
}

ClassTraits traits(ModelClass c) noexcept {
  switch (c) {
    case ModelClass::MNL: return {};
    case ModelClass::RP_MNL: return {.random_coefficients = true};
    case ModelClass::S_MNL: return {.scale = true};
    case ModelClass::HS_MNL: return {.scale = true, .scale_covariates = true};
    case ModelClass::GMNL_I:
      return {.random_coefficients = true, .scale = true, .fixed_kappa = 1.0};
    case ModelClass::GMNL_II:
      return {.random_coefficients = true, .scale = true, .fixed_kappa = 0.0};
    case ModelClass::H_GMNL:
      return {.random_coefficients = true,
              .scale = true,
              .scale_covariates = true,
              .free_kappa = true};
  }
  return {};
}

std::string_view to_string(DrawScheme s) noexcept {
  return s == DrawScheme::Halton ? "halton" : "pseudo-random";
}

std::optional<DrawScheme> parse_draw_scheme(std::string_view s) noexcept {
  const auto key = normalize_key(s);
  if (key == "halton") return DrawScheme::Halton;
  if (key == "pseudorandom" || key == "random" || key == "prng") return DrawScheme::PseudoRandom;
  return std::nullopt;
}

std::size_t CoefficientLayout::random_count() const noexcept {
  const auto count = [](const std::vector<Coefficient>& v) {
    return static_cast<std::size_t>(
        std::count_if(v.begin(), v.end(), [](const Coefficient& c) { return c.random; }));
  };
  return count(crash) + count(nearcrash);
}

void validate(const ModelSpec& spec) {
  const auto t = traits(spec.model_class);
  const std::string cls(to_string(spec.model_class));
  if (spec.draws < 1) throw InvalidParameter("draws must be at least 1");
  if (spec.layout.size() == 0) throw InvalidParameter("layout has no coefficients");
  for (const auto* side : {&spec.layout.crash, &spec.layout.nearcrash}) {
    std::set<std::string> seen;
    for (const auto& c : *side) {
      if (c.name.empty()) throw InvalidParameter("empty coefficient name");
      if (!seen.insert(c.name).second) {
        throw InvalidParameter("duplicate coefficient name in one outcome: " + c.name);
      }
    }
  }
  if (!t.random_coefficients && spec.layout.random_count() > 0) {
    throw InvalidParameter(cls + " does not allow random coefficients");
  }
  if (!t.scale_covariates && !spec.scale_covariates.empty()) {
    throw InvalidParameter(cls + " does not allow scale covariates");
  }
  std::set<std::string> seen;
  for (const auto& z : spec.scale_covariates) {
    if (z == kConstant) throw InvalidParameter("a constant cannot enter the scale function");
    if (!seen.insert(z).second) throw InvalidParameter("duplicate scale covariate: " + z);
  }
}

std::size_t effective_draws(const ModelSpec& spec) noexcept {
  const auto t = traits(spec.model_class);
  const bool mixes = t.random_coefficients && spec.layout.random_count() > 0;
  return (mixes || t.scale) ? spec.draws : 1;
}

std::size_t draw_dimensions(const ModelSpec& spec) noexcept {
  const auto t = traits(spec.model_class);
  return (t.random_coefficients ? spec.layout.random_count() : 0) + (t.scale ? 1 : 0);
}

ParameterSet zero_parameters(const ModelSpec& spec) {
  const auto t = traits(spec.model_class);
  ParameterSet p;
  p.beta.assign(spec.layout.size(), 0.0);
  p.omega_sd.assign(t.random_coefficients ? spec.layout.random_count() : 0, 0.0);
  p.theta.assign(spec.scale_covariates.size(), 0.0);
  p.tau = 0.0;
  p.kappa = t.free_kappa ? 0.5 : t.fixed_kappa;
  return p;
}

void validate(const ParameterSet& params, const ModelSpec& spec) {
  const auto t = traits(spec.model_class);
  if (params.beta.size() != spec.layout.size()) throw InvalidParameter("beta has wrong length");
  const std::size_t n_random = t.random_coefficients ? spec.layout.random_count() : 0;
  if (params.omega_sd.size() != n_random) throw InvalidParameter("omega_sd has wrong length");
  if (params.theta.size() != spec.scale_covariates.size()) {
    throw InvalidParameter("theta has wrong length");
  }
  if (!all_finite(params.beta) || !all_finite(params.omega_sd) || !all_finite(params.theta) ||
      !std::isfinite(params.tau) || !std::isfinite(params.kappa)) {
    throw InvalidParameter("non-finite parameter");
  }
  if (std::any_of(params.omega_sd.begin(), params.omega_sd.end(), [](double w) { return w < 0; })) {
    throw InvalidParameter("negative random-coefficient standard deviation");
  }
  if (params.tau < 0.0) throw InvalidParameter("tau must be non-negative");
  if (params.kappa < 0.0 || params.kappa > 1.0) throw InvalidParameter("kappa outside [0, 1]");
}

std::array<std::size_t, kOutcomeCount> ChoiceDataset::outcome_counts() const noexcept {
  std::array<std::size_t, kOutcomeCount> counts{};
  for (const auto& e : events) ++counts[static_cast<std::size_t>(e.observed)];
  return counts;
}

void ChoiceDataset::validate() const {
  for (const auto& e : events) {
    if (e.x_crash.size() != crash_names.size() || e.x_nearcrash.size() != nearcrash_names.size() ||
        e.z_scale.size() != scale_names.size()) {
      throw LayoutError("event " + e.event_id + ": covariate vector width mismatch");
    }
    if (!all_finite(e.x_crash) || !all_finite(e.x_nearcrash) || !all_finite(e.z_scale)) {
      throw LayoutError("event " + e.event_id + ": non-finite covariate");
    }
  }
}

std::optional<std::size_t> CovariateTable::column_index(std::string_view name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) return std::nullopt;
  return static_cast<std::size_t>(it - columns.begin());
}

ChoiceDataset make_dataset(const CovariateTable& table, const ModelSpec& spec) {
  validate(spec);
  if (table.event_ids.size() != table.rows.size() || table.observed.size() != table.rows.size()) {
    throw LayoutError("covariate table columns have different lengths");
  }
  // Column lookup, with nullopt standing for the constant.
  const auto resolve = [&](const std::string& name) -> std::optional<std::size_t> {
    if (name == kConstant) return std::nullopt;
    const auto idx = table.column_index(name);
    if (!idx) throw LayoutError("unknown covariate: " + name);
    return idx;
  };
  std::vector<std::optional<std::size_t>> crash_cols, nc_cols, z_cols;
  ChoiceDataset ds;
  for (const auto& c : spec.layout.crash) {
    crash_cols.push_back(resolve(c.name));
    ds.crash_names.push_back(c.name);
  }
  for (const auto& c : spec.layout.nearcrash) {
    nc_cols.push_back(resolve(c.name));
    ds.nearcrash_names.push_back(c.name);
  }
  for (const auto& z : spec.scale_covariates) {
    z_cols.push_back(resolve(z));
    ds.scale_names.push_back(z);
  }
  ds.events.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    if (row.size() != table.columns.size()) {
      throw LayoutError("event " + table.event_ids[i] + ": row width mismatch");
    }
    const auto pick = [&](const std::vector<std::optional<std::size_t>>& cols) {
      std::vector<double> x;
      x.reserve(cols.size());
      for (const auto& c : cols) x.push_back(c ? row[*c] : 1.0);
      return x;
    };
    ds.events.push_back(EventRecord{table.event_ids[i], table.observed[i], pick(crash_cols),
                                    pick(nc_cols), pick(z_cols)});
  }
  ds.validate();
  return ds;
}

double scale_factor(std::span<const double> theta, std::span<const double> z, double tau,
                    double eps0) {
  if (theta.size() != z.size()) throw InvalidParameter("scale_factor: theta/z length mismatch");
  if (!std::isfinite(tau) || !std::isfinite(eps0) || !all_finite(theta) || !all_finite(z)) {
    throw InvalidParameter("scale_factor: non-finite input");
  }
  if (tau < 0.0) throw InvalidParameter("scale_factor: tau must be non-negative");
  const double log_sigma = -0.5 * tau * tau + kernels::dot(theta, z) + tau * eps0;
  return std::exp(log_sigma);
}

std::vector<double> blend_coefficients(std::span<const double> beta,
                                       std::span<const double> w_draw, double sigma,
                                       double kappa) {
  if (beta.size() != w_draw.size()) {
    throw InvalidParameter("blend_coefficients: beta/w length mismatch");
  }
  if (!(kappa >= 0.0 && kappa <= 1.0)) throw InvalidParameter("kappa outside [0, 1]");
  if (!std::isfinite(sigma) || !(sigma > 0.0)) {
    throw InvalidParameter("blend_coefficients: sigma must be positive");
  }
  std::vector<double> out(beta.size(), 0.0);
  kernels::axpy(sigma, beta, out);
  kernels::axpy(kappa + (1.0 - kappa) * sigma, w_draw, out);
  return out;
}

Utilities utilities(std::span<const double> beta_crash, std::span<const double> x_crash,
                    std::span<const double> beta_nearcrash,
                    std::span<const double> x_nearcrash) {
  if (beta_crash.size() != x_crash.size() || beta_nearcrash.size() != x_nearcrash.size()) {
    throw LayoutError("utilities: coefficient/covariate length mismatch");
  }
  if (!all_finite(x_crash) || !all_finite(x_nearcrash) || !all_finite(beta_crash) ||
      !all_finite(beta_nearcrash)) {
    throw LayoutError("utilities: non-finite coefficient or covariate");
  }
  return {kernels::dot(beta_crash, x_crash), kernels::dot(beta_nearcrash, x_nearcrash), 0.0};
}

Probabilities choice_probabilities(const Utilities& v) {
  const double vn = v.nearcrash - v.baseline;
  const double vc = v.crash - v.baseline;
  Probabilities p;
  kernels::softmax3({&vn, 1}, {&vc, 1}, {&p.baseline, 1}, {&p.nearcrash, 1}, {&p.crash, 1});
  return p;
}

}  // namespace volatix
