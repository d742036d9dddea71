#include "volatix/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "volatix/error.hpp"
#include "volatix/likelihood.hpp"
#include "volatix/parallel.hpp"
#include "volatix/random.hpp"

namespace volatix {

std::vector<CovariateDistribution> default_volatility_covariates() {
  return {{"cv_jerk_pos_long", Distribution::Normal, 1.05, 0.35},
          {"cv_jerk_neg_long", Distribution::Normal, 0.86, 0.30},
          {"cv_jerk_pos_lat", Distribution::Normal, 1.01, 0.40},
          {"cv_jerk_neg_lat", Distribution::Normal, 0.89, 0.42}};
}

namespace {

void validate_config(const GeneratorConfig& c) {
  validate(c.spec);
  validate(c.truth, c.spec);
  if (c.n_events < 1) throw InvalidParameter("generator needs at least one event");
  for (const auto& d : c.covariates) {
    const bool ok = (d.kind == Distribution::Normal && d.b >= 0.0 && std::isfinite(d.a)) ||
                    (d.kind == Distribution::Bernoulli && d.a >= 0.0 && d.a <= 1.0) ||
                    (d.kind == Distribution::Uniform && d.a < d.b && std::isfinite(d.a) &&
                     std::isfinite(d.b));
    if (!ok) throw InvalidParameter("improper distribution for covariate " + d.name);
  }
}

double draw_covariate(const CovariateDistribution& d, Rng& rng) {
  switch (d.kind) {
    case Distribution::Normal: return rng.normal(d.a, d.b);
    case Distribution::Bernoulli: return rng.bernoulli(d.a) ? 1.0 : 0.0;
    case Distribution::Uniform: return rng.uniform(d.a, d.b);
  }
  return 0.0;
}

}  // namespace

SyntheticSample generate_sample(const GeneratorConfig& config) {
  validate_config(config);
  const ModelStructure model(config.spec);
  const std::size_t dims = draw_dimensions(config.spec);
  const std::size_t n = config.n_events;

  SyntheticSample out;
  for (const auto& d : config.covariates) out.table.columns.push_back(d.name);
  out.table.event_ids.resize(n);
  out.table.observed.resize(n);
  out.table.rows.resize(n);
  out.true_probabilities.resize(n);

  // Resolve the layout against the generated columns once, up front.
  CovariateTable probe;
  probe.columns = out.table.columns;
  (void)make_dataset(probe, config.spec);

  const std::size_t n_chunks = (n + kEventChunk - 1) / kEventChunk;
  parallel_for(n_chunks, [&](std::size_t chunk) {
    const std::size_t lo = chunk * kEventChunk;
    const std::size_t hi = std::min(n, lo + kEventChunk);
    CovariateTable one;
    one.columns = out.table.columns;
    one.event_ids.resize(1);
    one.observed.resize(1);
    one.rows.resize(1);
    for (std::size_t i = lo; i < hi; ++i) {
      Rng rng(derive_seed(config.seed, "synthetic-event", i));
      std::vector<double> row;
      row.reserve(config.covariates.size());
      for (const auto& d : config.covariates) row.push_back(draw_covariate(d, rng));
      // One draw of the random coefficients and pure scale term per event.
      std::vector<double> draw(dims);
      for (double& v : draw) v = rng.normal();
      const EventDraws ed{1, dims, draw.data()};

      one.event_ids[0] = "syn" + std::to_string(i + 1);
      one.rows[0] = row;
      const ChoiceDataset single = make_dataset(one, config.spec);
      const Probabilities p = simulated_probability(model, config.truth, single.events[0], ed);
      const double u = rng.uniform();
      const Outcome y = u < p.baseline
                            ? Outcome::Baseline
                            : (u < p.baseline + p.nearcrash ? Outcome::NearCrash : Outcome::Crash);
      out.table.event_ids[i] = one.event_ids[0];
      out.table.observed[i] = y;
      out.table.rows[i] = std::move(row);
      out.true_probabilities[i] = p;
    }
  });
  out.dataset = make_dataset(out.table, config.spec);
  return out;
}

ChoiceDataset generate(const GeneratorConfig& config) { return generate_sample(config).dataset; }

namespace {

double sample_cv(const std::vector<double>& v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (const double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1)) / mean;
}

// m log-normal quantiles at stratified probabilities whose sample CV equals
// `target`, scaled to mean 1.
std::vector<double> calibrated_magnitudes(std::size_t m, double target) {
  if (m < 2) throw InvalidTarget("series too short to carry a dispersion target");
  std::vector<double> z(m);
  for (std::size_t i = 0; i < m; ++i) {
    z[i] = normal_quantile((static_cast<double>(i) + 0.5) / static_cast<double>(m));
  }
  const auto build = [&](double eta) {
    std::vector<double> q(m);
    for (std::size_t i = 0; i < m; ++i) q[i] = std::exp(eta * z[i]);
    return q;
  };
  double lo = 0.0, hi = 6.0;
  if (sample_cv(build(hi)) < target) {
    throw InvalidTarget("coefficient-of-variation target " + std::to_string(target) +
                        " is not reachable with " + std::to_string(m) + " samples");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (sample_cv(build(mid)) < target ? lo : hi) = mid;
  }
  auto q = build(0.5 * (lo + hi));
  const double mean = std::accumulate(q.begin(), q.end(), 0.0) / static_cast<double>(m);
  for (double& x : q) x /= mean;
  return q;
}

void shuffle(std::vector<double>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

// Acceleration series (starting and ending at 0) whose forward-difference
// jerk has the requested sign-partitioned CVs.
std::vector<double> acceleration_series(std::size_t n, double dt, double magnitude, double cv_pos,
                                        double cv_neg, Rng& rng) {
  std::vector<double> accel(n, 0.0);
  if (magnitude == 0.0) return accel;
  const std::size_t m = n - 1;
  const std::size_t m_pos = m / 2;
  const std::size_t m_neg = m - m_pos;
  auto pos = calibrated_magnitudes(m_pos, cv_pos);
  auto neg = calibrated_magnitudes(m_neg, cv_neg);
  shuffle(pos, rng);
  shuffle(neg, rng);
  // Equal totals on both sides so the acceleration returns to zero.
  const double neg_scale = static_cast<double>(m_pos) / static_cast<double>(m_neg);
  std::vector<double> signs(m, -1.0);
  std::fill(signs.begin(), signs.begin() + static_cast<std::ptrdiff_t>(m_pos), 1.0);
  shuffle(signs, rng);
  std::size_t ip = 0, in = 0;
  for (std::size_t t = 0; t < m; ++t) {
    const double j = signs[t] > 0 ? magnitude * pos[ip++] : -magnitude * neg_scale * neg[in++];
    accel[t + 1] = accel[t] + j * dt;
  }
  return accel;
}

}  // namespace

std::vector<EventTrace> generate_traces(const TraceGeneratorConfig& config) {
  const auto& tg = config.targets;
  if (config.samples < 3) throw InvalidTarget("traces need at least 3 samples");
  if (!(config.sample_period > 0.0)) throw InvalidTarget("sample period must be positive");
  if (!(tg.jerk_magnitude >= 0.0) || !std::isfinite(tg.jerk_magnitude)) {
    throw InvalidTarget("jerk magnitude must be non-negative");
  }
  if (tg.mean_speed_kph < 0.0) throw InvalidTarget("mean speed must be non-negative");
  const std::optional<double> targets[] = {tg.cv_jerk_pos_long, tg.cv_jerk_neg_long,
                                           tg.cv_jerk_pos_lat, tg.cv_jerk_neg_lat};
  for (const auto& t : targets) {
    if (t && !(*t > 0.0)) throw InvalidTarget("coefficient-of-variation targets must be positive");
    if (t && tg.jerk_magnitude == 0.0) {
      throw InvalidTarget("a dispersion target cannot be met by a constant series");
    }
  }
  if (config.reaction_share < 0.0 || config.reaction_share > 1.0) {
    throw InvalidTarget("reaction share must lie in [0, 1]");
  }

  std::vector<EventType> types;
  types.insert(types.end(), config.n_baseline, EventType::Baseline);
  types.insert(types.end(), config.n_nearcrash, EventType::NearCrash);
  types.insert(types.end(), config.n_crash, EventType::Crash);

  std::vector<EventTrace> traces(types.size());
  parallel_for(types.size(), [&](std::size_t i) {
    Rng rng(derive_seed(config.seed, "trace", i));
    EventTrace& tr = traces[i];
    tr.event_id = "ev" + std::to_string(i + 1);
    tr.event_type = types[i];
    tr.sample_period = config.sample_period;
    const std::size_t n = config.samples;
    tr.accel_long = acceleration_series(n, config.sample_period, tg.jerk_magnitude,
                                        tg.cv_jerk_pos_long.value_or(1.0),
                                        tg.cv_jerk_neg_long.value_or(1.0), rng);
    tr.accel_lat = acceleration_series(n, config.sample_period, tg.jerk_magnitude,
                                       tg.cv_jerk_pos_lat.value_or(1.0),
                                       tg.cv_jerk_neg_lat.value_or(1.0), rng);
    tr.speed_kph.assign(n, 0.0);
    for (std::size_t t = 1; t < n; ++t) {
      tr.speed_kph[t] = tr.speed_kph[t - 1] + tr.accel_long[t - 1] * config.sample_period / kKphToMps;
    }
    const double mean =
        std::accumulate(tr.speed_kph.begin(), tr.speed_kph.end(), 0.0) / static_cast<double>(n);
    for (double& v : tr.speed_kph) v = std::max(0.0, v - mean + tg.mean_speed_kph);

    if (tr.event_type != EventType::Baseline) {
      // Impact in the last tenth of the trace; reaction 0.5-3 s before it.
      const std::size_t impact = n - 1 - rng.below(std::max<std::size_t>(1, n / 10));
      tr.impact_index = impact;
      if (rng.uniform() < config.reaction_share) {
        const std::size_t lead = 5 + rng.below(26);
        tr.reaction_index = impact > lead + 2 ? impact - lead : 2;
      } else if (rng.bernoulli(0.5)) {
        tr.reaction_index = std::min(n - 1, impact + rng.below(5));
      }
    }
  });
  return traces;
}

}  // namespace volatix
