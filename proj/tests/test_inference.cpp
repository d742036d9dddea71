#include <doctest.h>

#include <cmath>
#include <random>

#include "volatix/error.hpp"
#include "volatix/inference.hpp"
#include "volatix/likelihood.hpp"
#include "volatix/parallel.hpp"
#include "support.hpp"

using namespace volatix;

namespace {

/// A "fit" with hand-set parameters, for analysing known models.
FitResult fixed_fit(const ModelSpec& spec, const ParameterSet& p, std::size_t n) {
  FitResult f;
  f.spec = spec;
  f.estimates = p;
  const ModelStructure m(spec);
  f.estimate_vector = m.pack(p);
  f.parameter_names = m.parameter_names();
  f.parameter_count = m.parameter_count();
  f.n_events = n;
  f.converged = true;
  return f;
}

ChoiceDataset mixed_data(std::size_t n, std::uint64_t seed, bool with_z) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(1.0, 0.4);
  std::vector<std::vector<double>> x;
  std::vector<Outcome> y;
  for (std::size_t i = 0; i < n; ++i) {
    x.push_back({1.0, nd(rng), static_cast<double>(rng() % 2)});
    y.push_back(kOutcomes[i % 3]);
  }
  auto d = testsupport::make_choice_data(x, y, {"const", "vol", "zone"});
  if (with_z) {
    d.scale_names = {"speed"};
    for (auto& e : d.events) e.z_scale = {nd(rng)};
  }
  return d;
}

FitResult hgmnl_fit(std::size_t n) {
  ModelSpec s;
  s.model_class = ModelClass::H_GMNL;
  s.layout = testsupport::layout_of({"const", "vol", "zone"}, {"const", "vol", "zone"},
                                    {"Crash:vol"});
  s.scale_covariates = {"speed"};
  s.draws = 60;
  ParameterSet p = zero_parameters(s);
  p.beta = {-1.0, 0.8, 0.3, -0.5, 0.4, -0.2};
  p.omega_sd = {0.6};
  p.theta = {0.2};
  p.tau = 0.5;
  p.kappa = 0.4;
  return fixed_fit(s, p, n);
}

ModelSpec mnl_spec() {
  ModelSpec s;
  s.layout = testsupport::layout_of({"const", "vol", "zone"}, {"const", "vol", "zone"});
  return s;
}

}  // namespace

TEST_CASE("marginal effects close over the simplex") {
  const auto data = mixed_data(300, 1, true);
  const auto fit = hgmnl_fit(data.size());
  const auto table = marginal_effects(fit, data);
  REQUIRE(table.rows.size() == 3);  // vol, zone, speed
  CHECK(table.rows[0].covariate == "vol");
  CHECK_FALSE(table.rows[0].discrete);
  CHECK(table.rows[1].discrete);
  CHECK(table.rows[2].covariate == "speed");
  for (const auto& r : table.rows) {
    CAPTURE(r.covariate);
    CHECK(std::abs(r.effect[0] + r.effect[1] + r.effect[2]) < 1e-10);
  }
  // Positive crash coefficient on vol, and it moves crash probability up.
  CHECK(table.rows[0].effect[2] > 0);
}

TEST_CASE("covariate with zero coefficients has exactly zero effects") {
  const auto data = mixed_data(50, 2, false);
  ParameterSet p = zero_parameters(mnl_spec());
  p.beta = {-1.0, 0.0, 0.5, -0.5, 0.0, 0.1};
  const auto table = marginal_effects(fixed_fit(mnl_spec(), p, data.size()), data);
  for (double e : table.rows[0].effect) CHECK(e == 0.0);
}

TEST_CASE("two-event MNL effect matches the analytic logit derivative") {
  std::vector<std::vector<double>> x{{1.0, 0.3, 0.0}, {1.0, 1.7, 1.0}};
  const auto data = testsupport::make_choice_data(x, {Outcome::Crash, Outcome::Baseline},
                                                  {"const", "vol", "zone"});
  ParameterSet p = zero_parameters(mnl_spec());
  p.beta = {-0.4, 0.9, 0.3, 0.2, -0.6, 0.1};
  const auto table = marginal_effects(fixed_fit(mnl_spec(), p, 2), data);
  const double b[3] = {0.0, p.beta[4], p.beta[1]};  // slope of vol per outcome
  std::array<double, 3> want{};
  for (const auto& e : data.events) {
    const double vc = p.beta[0] + p.beta[1] * e.x_crash[1] + p.beta[2] * e.x_crash[2];
    const double vn = p.beta[3] + p.beta[4] * e.x_nearcrash[1] + p.beta[5] * e.x_nearcrash[2];
    const auto pr = testsupport::logit3(vn, vc);
    const double bar = pr[0] * b[0] + pr[1] * b[1] + pr[2] * b[2];
    for (int k = 0; k < 3; ++k) want[k] += pr[k] * (b[k] - bar) / 2;
  }
  for (int k = 0; k < 3; ++k) CHECK(std::abs(table.rows[0].effect[k] - want[k]) < 1e-6);

  // zone is binary: discrete change averaged over both events.
  std::array<double, 3> change{};
  for (const auto& e : data.events) {
    auto prob = [&](double z) {
      const double vc = p.beta[0] + p.beta[1] * e.x_crash[1] + p.beta[2] * z;
      const double vn = p.beta[3] + p.beta[4] * e.x_nearcrash[1] + p.beta[5] * z;
      return testsupport::logit3(vn, vc);
    };
    const auto hi = prob(1.0), lo = prob(0.0);
    for (int k = 0; k < 3; ++k) change[k] += (hi[k] - lo[k]) / 2;
  }
  CHECK(table.rows[1].discrete);
  for (int k = 0; k < 3; ++k) CHECK(std::abs(table.rows[1].effect[k] - change[k]) < 1e-14);
}

TEST_CASE("probability curves") {
  const auto data = mixed_data(200, 3, false);
  ParameterSet p = zero_parameters(mnl_spec());
  p.beta = {-1.0, 0.9, 0.3, -0.5, 0.2, -0.2};
  const auto fit = fixed_fit(mnl_spec(), p, data.size());

  SUBCASE("flat grid gives a constant curve") {
    const auto c = probability_curve(fit, data, "vol", {0.8, 0.8, 0.8});
    CHECK(c.mean_probability[0].crash == c.mean_probability[2].crash);
  }
  SUBCASE("positive crash coefficient gives a nondecreasing crash curve") {
    std::vector<double> grid;
    for (int i = 0; i <= 40; ++i) grid.push_back(0.05 * i);
    const auto c = probability_curve(fit, data, "vol", grid);
    for (std::size_t i = 1; i < grid.size(); ++i) {
      CHECK(c.mean_probability[i].crash >= c.mean_probability[i - 1].crash);
    }
    for (const auto& pr : c.mean_probability) {
      CHECK(std::abs(pr.baseline + pr.nearcrash + pr.crash - 1) < 1e-12);
    }
  }
  SUBCASE("reversing the grid reverses the curve") {
    const std::vector<double> grid{0.2, 0.9, 1.4, 2.0};
    const std::vector<double> rev(grid.rbegin(), grid.rend());
    const auto a = probability_curve(fit, data, "vol", grid);
    const auto b = probability_curve(fit, data, "vol", rev);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      CHECK(a.mean_probability[i].crash == b.mean_probability[grid.size() - 1 - i].crash);
    }
  }
  SUBCASE("grid outside the observed range is annotated") {
    const auto c = probability_curve(fit, data, "vol", {1.0, 50.0});
    CHECK(c.warnings.size() == 1);
    CHECK(c.mean_probability.size() == 2);
  }
  SUBCASE("unknown covariate") {
    CHECK_THROWS_AS(probability_curve(fit, data, "nope", {1.0}), InvalidParameter);
  }
}

TEST_CASE("curve slope agrees with the marginal effect") {
  // When every event sits at the same value the curve's slope there is the
  // average marginal effect.
  auto data = mixed_data(120, 4, true);
  for (auto& e : data.events) e.x_crash[1] = e.x_nearcrash[1] = 0.7;
  const auto fit = hgmnl_fit(data.size());
  const double h = 1e-4;
  const auto c = probability_curve(fit, data, "vol", {0.7 - h, 0.7 + h});
  const auto table = marginal_effects(fit, data);
  const double slope = (c.mean_probability[1].crash - c.mean_probability[0].crash) / (2 * h);
  CHECK(std::abs(slope - table.rows[0].effect[2]) < 1e-8);
}

TEST_CASE("scenario simulation") {
  const auto data = mixed_data(400, 5, true);
  const auto fit = hgmnl_fit(data.size());

  SUBCASE("zero perturbation has exactly zero deltas") {
    const auto r = scenario_simulate(fit, data, Perturbation{"vol", PerturbationMode::Percent, 0.0});
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(r.delta_share_pct[k] == 0.0);
      CHECK(r.delta_count[k] == 0);
    }
  }
  SUBCASE("paper_scheme is seven scenarios after the baseline") {
    const auto rows = scenario_simulate(fit, data, paper_scheme("vol"));
    REQUIRE(rows.size() == 8);
    CHECK(rows[0].label == "No change (baseline)");
    CHECK(rows[1].label == "10% decrease");
    CHECK(rows[7].label == "2 SD decrease");
    for (const auto& r : rows) {
      CHECK(std::abs(r.share_pct[0] + r.share_pct[1] + r.share_pct[2] - 100.0) < 1e-8);
    }
    for (std::size_t k = 0; k < 3; ++k) CHECK(rows[0].delta_share_pct[k] == 0.0);
    for (std::size_t i = 2; i <= 5; ++i) CHECK(rows[i].share_pct[2] < rows[i - 1].share_pct[2]);
    for (const auto& r : rows) {
      CHECK(r.count[2] == static_cast<long long>(std::nearbyint(r.share_pct[2] / 100.0 * 400)));
    }
  }
  SUBCASE("composed percent cuts equal one combined cut") {
    const auto once = perturb(data, {"vol", PerturbationMode::Percent, 10.0});
    const auto twice = perturb(once, {"vol", PerturbationMode::Percent, 20.0});
    const auto direct = perturb(data, {"vol", PerturbationMode::Percent, 28.0});
    const auto a = mean_probabilities(fit, twice);
    const auto b = mean_probabilities(fit, direct);
    CHECK(std::abs(a.crash - b.crash) < 1e-14);
  }
  SUBCASE("only the targeted utility changes") {
    const auto p = perturb(data, {"vol", PerturbationMode::StandardDeviation, 1.0});
    CHECK(p.events[3].x_nearcrash == data.events[3].x_nearcrash);
    CHECK(p.events[3].x_crash[1] < data.events[3].x_crash[1]);
  }
  SUBCASE("a covariate outside the targeted utility is refused") {
    CHECK_THROWS_AS(perturb(data, {"speed", PerturbationMode::Percent, 10.0}), InvalidScenario);
    CHECK_THROWS_AS(perturb(data, {"const", PerturbationMode::Percent, 10.0}), InvalidScenario);
    CHECK_THROWS_AS(
        perturb(data, {"vol", PerturbationMode::Percent, 10.0, Outcome::Baseline}), InvalidScenario);
  }
  SUBCASE("denominator scales counts") {
    const auto r = scenario_simulate(fit, data, paper_scheme("vol"), 2319.0);
    CHECK(r[0].count[2] == static_cast<long long>(std::nearbyint(r[0].share_pct[2] / 100 * 2319)));
  }
}

TEST_CASE("three-event toy: a 10% cut lowers crash probability by the hand amount") {
  std::vector<std::vector<double>> x{{1.0, 0.5, 0.0}, {1.0, 1.0, 1.0}, {1.0, 2.0, 0.0}};
  const auto data = testsupport::make_choice_data(
      x, {Outcome::Crash, Outcome::NearCrash, Outcome::Baseline}, {"const", "vol", "zone"});
  ParameterSet p = zero_parameters(mnl_spec());
  p.beta = {-0.7, 1.2, 0.0, -0.2, 0.3, 0.0};
  const auto fit = fixed_fit(mnl_spec(), p, 3);
  double before = 0, after = 0;
  for (const auto& row : x) {
    const double vn = p.beta[3] + p.beta[4] * row[1];
    before += testsupport::logit3(vn, p.beta[0] + p.beta[1] * row[1])[2] / 3;
    after += testsupport::logit3(vn, p.beta[0] + p.beta[1] * 0.9 * row[1])[2] / 3;
  }
  const auto r = scenario_simulate(fit, data, Perturbation{"vol", PerturbationMode::Percent, 10.0});
  CHECK(std::abs(r.delta_share_pct[2] / 100 - (after - before)) < 1e-8);
}

TEST_CASE("unconverged fits need an explicit override") {
  const auto data = mixed_data(30, 6, false);
  ParameterSet p = zero_parameters(mnl_spec());
  auto fit = fixed_fit(mnl_spec(), p, data.size());
  fit.converged = false;
  CHECK_THROWS_AS(marginal_effects(fit, data), NotFitted);
  CHECK_NOTHROW(marginal_effects(fit, data, {.allow_unconverged = true}));
  CHECK_THROWS_AS(marginal_effects(FitResult{}, data), NotFitted);
}

TEST_CASE("inference results do not depend on the thread count") {
  const auto data = mixed_data(500, 7, true);
  const auto fit = hgmnl_fit(data.size());
  const unsigned saved = thread_count();
  set_thread_count(1);
  const auto a = marginal_effects(fit, data);
  const auto sa = scenario_simulate(fit, data, paper_scheme("vol"));
  set_thread_count(8);
  const auto b = marginal_effects(fit, data);
  const auto sb = scenario_simulate(fit, data, paper_scheme("vol"));
  set_thread_count(saved);
  for (std::size_t i = 0; i < a.rows.size(); ++i) CHECK(a.rows[i].effect == b.rows[i].effect);
  for (std::size_t i = 0; i < sa.size(); ++i) CHECK(sa[i].share_pct == sb[i].share_pct);
}
