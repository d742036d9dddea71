#include "volatix/inference.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "volatix/error.hpp"
#include "volatix/parallel.hpp"

namespace volatix {

namespace {

void require_fit(const FitResult& fit, const InferenceOptions& options) {
  if (fit.estimate_vector.size() == 0 || fit.n_events == 0) {
    throw NotFitted("model has not been fitted");
  }
  if (!fit.converged && !options.allow_unconverged) {
    throw NotFitted("fit did not converge; pass allow_unconverged to analyse it anyway");
  }
}

// Where one named covariate sits in an event record.
struct Positions {
  std::optional<std::size_t> crash, nearcrash, scale;

  bool any() const { return crash || nearcrash || scale; }
};

Positions locate(const ChoiceDataset& data, const std::string& name) {
  const auto find = [&](const std::vector<std::string>& names) -> std::optional<std::size_t> {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) return std::nullopt;
    return static_cast<std::size_t>(it - names.begin());
  };
  if (name == kConstant) return {};
  return {find(data.crash_names), find(data.nearcrash_names), find(data.scale_names)};
}

double get_value(const EventRecord& e, const Positions& p) {
  if (p.crash) return e.x_crash[*p.crash];
  if (p.nearcrash) return e.x_nearcrash[*p.nearcrash];
  return e.z_scale[*p.scale];
}

void set_value(EventRecord& e, const Positions& p, double v) {
  if (p.crash) e.x_crash[*p.crash] = v;
  if (p.nearcrash) e.x_nearcrash[*p.nearcrash] = v;
  if (p.scale) e.z_scale[*p.scale] = v;
}

struct ProbSum {
  std::array<double, kOutcomeCount> sum{};
};

// Sum over events of f(event index, workspace probabilities), chunked with a
// fixed reduction tree.
template <class PerEvent>
std::array<double, kOutcomeCount> sum_over_events(std::size_t n, PerEvent per_event) {
  const std::size_t n_chunks = (n + kEventChunk - 1) / kEventChunk;
  std::vector<ProbSum> parts(n_chunks);
  parallel_for(n_chunks, [&](std::size_t chunk) {
    const std::size_t lo = chunk * kEventChunk;
    const std::size_t hi = std::min(n, lo + kEventChunk);
    for (std::size_t i = lo; i < hi; ++i) {
      const std::array<double, kOutcomeCount> v = per_event(i);
      for (std::size_t k = 0; k < kOutcomeCount; ++k) parts[chunk].sum[k] += v[k];
    }
  });
  return tree_reduce(std::move(parts), [](ProbSum& a, const ProbSum& b) {
                           for (std::size_t k = 0; k < kOutcomeCount; ++k) a.sum[k] += b.sum[k];
                         })
      .sum;
}

std::array<double, kOutcomeCount> as_array(const Probabilities& p) {
  return {p.baseline, p.nearcrash, p.crash};
}

Probabilities from_array(const std::array<double, kOutcomeCount>& a) {
  return {a[0], a[1], a[2]};
}

void check_dataset(const FitResult& fit, const ChoiceDataset& data) {
  data.validate();
  std::vector<std::string> crash, nc;
  for (const auto& c : fit.spec.layout.crash) crash.push_back(c.name);
  for (const auto& c : fit.spec.layout.nearcrash) nc.push_back(c.name);
  if (crash != data.crash_names || nc != data.nearcrash_names ||
      fit.spec.scale_covariates != data.scale_names) {
    throw LayoutError("dataset columns do not match the fitted model");
  }
  if (data.size() == 0) throw InvalidParameter("empty dataset");
}

}  // namespace

std::vector<std::string> model_covariates(const ModelSpec& spec) {
  std::vector<std::string> names;
  const auto add = [&](const std::string& n) {
    if (n != kConstant && std::find(names.begin(), names.end(), n) == names.end()) {
      names.push_back(n);
    }
  };
  for (const auto& c : spec.layout.crash) add(c.name);
  for (const auto& c : spec.layout.nearcrash) add(c.name);
  for (const auto& z : spec.scale_covariates) add(z);
  return names;
}

Probabilities mean_probabilities(const FitResult& fit, const ChoiceDataset& data) {
  check_dataset(fit, data);
  const ModelStructure model(fit.spec);
  const DrawBlock draws = make_draws(fit.spec, data.size());
  const auto sum = sum_over_events(data.size(), [&](std::size_t i) {
    return as_array(simulated_probability(model, fit.estimates, data.events[i], draws.event(i)));
  });
  const double n = static_cast<double>(data.size());
  return {sum[0] / n, sum[1] / n, sum[2] / n};
}

MarginalEffectTable marginal_effects(const FitResult& fit, const ChoiceDataset& data,
                                     const InferenceOptions& options) {
  require_fit(fit, options);
  check_dataset(fit, data);
  const ModelStructure model(fit.spec);
  const DrawBlock draws = make_draws(fit.spec, data.size());
  const double n = static_cast<double>(data.size());

  MarginalEffectTable table;
  for (const auto& name : model_covariates(fit.spec)) {
    const Positions pos = locate(data, name);
    const bool binary = std::all_of(data.events.begin(), data.events.end(), [&](const auto& e) {
      const double v = get_value(e, pos);
      return v == 0.0 || v == 1.0;
    });
    const auto sum = sum_over_events(data.size(), [&](std::size_t i) {
      EventRecord e = data.events[i];
      const double x = get_value(e, pos);
      double lo_x = 0.0, hi_x = 1.0, width = 1.0;
      if (!binary) {
        const double h = std::max(1e-4, 1e-4 * std::abs(x));
        lo_x = x - h;
        hi_x = x + h;
        width = 2.0 * h;
      }
      set_value(e, pos, hi_x);
      const auto p_hi = simulated_probability(model, fit.estimates, e, draws.event(i));
      set_value(e, pos, lo_x);
      const auto p_lo = simulated_probability(model, fit.estimates, e, draws.event(i));
      return std::array<double, kOutcomeCount>{(p_hi.baseline - p_lo.baseline) / width,
                                               (p_hi.nearcrash - p_lo.nearcrash) / width,
                                               (p_hi.crash - p_lo.crash) / width};
    });
    MarginalEffect row;
    row.covariate = name;
    row.discrete = binary;
    for (std::size_t k = 0; k < kOutcomeCount; ++k) row.effect[k] = sum[k] / n;
    table.rows.push_back(std::move(row));
  }
  return table;
}

ProbabilityCurve probability_curve(const FitResult& fit, const ChoiceDataset& data,
                                   const std::string& covariate, const std::vector<double>& grid,
                                   const InferenceOptions& options) {
  require_fit(fit, options);
  check_dataset(fit, data);
  const Positions pos = locate(data, covariate);
  if (!pos.any()) throw InvalidParameter("covariate not in the model: " + covariate);
  if (!std::all_of(grid.begin(), grid.end(), [](double g) { return std::isfinite(g); })) {
    throw InvalidParameter("probability_curve: grid must be finite");
  }
  const ModelStructure model(fit.spec);
  const DrawBlock draws = make_draws(fit.spec, data.size());
  const double n = static_cast<double>(data.size());

  ProbabilityCurve curve;
  curve.covariate = covariate;
  curve.grid = grid;
  double lo = get_value(data.events.front(), pos), hi = lo;
  for (const auto& e : data.events) {
    lo = std::min(lo, get_value(e, pos));
    hi = std::max(hi, get_value(e, pos));
  }
  for (const double g : grid) {
    if (g < lo || g > hi) {
      std::ostringstream os;
      os << "grid value " << g << " outside observed support [" << lo << ", " << hi << "] of "
         << covariate;
      curve.warnings.push_back(os.str());
    }
    const auto sum = sum_over_events(data.size(), [&](std::size_t i) {
      EventRecord e = data.events[i];
      set_value(e, pos, g);
      return as_array(simulated_probability(model, fit.estimates, e, draws.event(i)));
    });
    curve.mean_probability.push_back(from_array({sum[0] / n, sum[1] / n, sum[2] / n}));
  }
  return curve;
}

namespace {

double sample_sd(const ChoiceDataset& data, const Positions& pos) {
  const double n = static_cast<double>(data.size());
  double mean = 0.0;
  for (const auto& e : data.events) mean += get_value(e, pos);
  mean /= n;
  double ss = 0.0;
  for (const auto& e : data.events) {
    const double d = get_value(e, pos) - mean;
    ss += d * d;
  }
  return data.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
}

std::string default_label(const Perturbation& p) {
  std::ostringstream os;
  if (p.mode == PerturbationMode::Percent) {
    os << p.amount << "% decrease";
  } else {
    os << p.amount << " SD decrease";
  }
  return os.str();
}

ScenarioResult summarize(const std::string& label, const Probabilities& mean, double denominator) {
  ScenarioResult r;
  r.label = label;
  const auto a = as_array(mean);
  for (std::size_t k = 0; k < kOutcomeCount; ++k) {
    r.share_pct[k] = 100.0 * a[k];
    // nearbyint honours the default round-to-nearest-even mode.
    r.count[k] = static_cast<long long>(std::nearbyint(a[k] * denominator));
  }
  return r;
}

}  // namespace

ChoiceDataset perturb(const ChoiceDataset& data, const Perturbation& p) {
  if (p.target == Outcome::Baseline) {
    throw InvalidScenario("the baseline outcome has no utility to perturb");
  }
  const auto& names = p.target == Outcome::Crash ? data.crash_names : data.nearcrash_names;
  const auto it = std::find(names.begin(), names.end(), p.covariate);
  if (p.covariate == kConstant || it == names.end()) {
    throw InvalidScenario("covariate '" + p.covariate + "' is not in the " +
                          std::string(to_string(p.target)) + " utility");
  }
  if (!std::isfinite(p.amount)) throw InvalidScenario("perturbation amount must be finite");
  const auto idx = static_cast<std::size_t>(it - names.begin());
  Positions pos;
  (p.target == Outcome::Crash ? pos.crash : pos.nearcrash) = idx;

  const double sd = p.mode == PerturbationMode::StandardDeviation ? sample_sd(data, pos) : 0.0;
  ChoiceDataset out = data;
  for (auto& e : out.events) {
    auto& x = p.target == Outcome::Crash ? e.x_crash[idx] : e.x_nearcrash[idx];
    if (p.mode == PerturbationMode::Percent) {
      x *= 1.0 - p.amount / 100.0;
    } else {
      x -= p.amount * sd;
    }
  }
  return out;
}

std::vector<ScenarioResult> scenario_simulate(const FitResult& fit, const ChoiceDataset& data,
                                              const std::vector<Perturbation>& perturbations,
                                              std::optional<double> denominator,
                                              const InferenceOptions& options) {
  require_fit(fit, options);
  check_dataset(fit, data);
  const double denom = denominator.value_or(static_cast<double>(data.size()));
  if (!(denom > 0.0)) throw InvalidScenario("count denominator must be positive");
  // Validate every scenario before doing any work.
  std::vector<ChoiceDataset> perturbed;
  perturbed.reserve(perturbations.size());
  for (const auto& p : perturbations) perturbed.push_back(perturb(data, p));

  std::vector<ScenarioResult> results;
  const ScenarioResult base = summarize("No change (baseline)", mean_probabilities(fit, data), denom);
  results.push_back(base);
  for (std::size_t s = 0; s < perturbations.size(); ++s) {
    const auto& p = perturbations[s];
    ScenarioResult r = summarize(p.label.empty() ? default_label(p) : p.label,
                                 mean_probabilities(fit, perturbed[s]), denom);
    for (std::size_t k = 0; k < kOutcomeCount; ++k) {
      r.delta_share_pct[k] = r.share_pct[k] - base.share_pct[k];
      r.delta_count[k] = r.count[k] - base.count[k];
    }
    results.push_back(std::move(r));
  }
  return results;
}

ScenarioResult scenario_simulate(const FitResult& fit, const ChoiceDataset& data,
                                 const Perturbation& perturbation,
                                 std::optional<double> denominator,
                                 const InferenceOptions& options) {
  return scenario_simulate(fit, data, std::vector<Perturbation>{perturbation}, denominator, options)
      .back();
}

std::vector<Perturbation> paper_scheme(const std::string& covariate, Outcome target) {
  std::vector<Perturbation> out;
  for (int pct = 10; pct <= 50; pct += 10) {
    out.push_back({covariate, PerturbationMode::Percent, static_cast<double>(pct), target,
                   std::to_string(pct) + "% decrease"});
  }
  out.push_back({covariate, PerturbationMode::StandardDeviation, 1.0, target, "1 SD decrease"});
  out.push_back({covariate, PerturbationMode::StandardDeviation, 2.0, target, "2 SD decrease"});
  return out;
}

}  // namespace volatix
