#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "volatix/draws.hpp"
#include "volatix/error.hpp"
#include "volatix/estimation.hpp"
#include "volatix/likelihood.hpp"
#include "volatix/parallel.hpp"
#include "support.hpp"

using namespace volatix;

namespace {

ChoiceDataset toy_data(std::size_t n, std::uint64_t seed, bool with_z = false) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::vector<std::vector<double>> x;
  std::vector<Outcome> y;
  for (std::size_t i = 0; i < n; ++i) {
    x.push_back({1.0, nd(rng), nd(rng)});
    y.push_back(kOutcomes[rng() % 3]);
  }
  auto d = testsupport::make_choice_data(x, y, {"const", "a", "b"});
  if (with_z) {
    d.scale_names = {"z"};
    for (auto& e : d.events) e.z_scale = {nd(rng)};
  }
  return d;
}

ModelSpec spec_for(ModelClass c, std::size_t draws = 40) {
  ModelSpec s;
  s.model_class = c;
  s.draws = draws;
  const bool mixes = traits(c).random_coefficients;
  s.layout = mixes ? testsupport::layout_of({"const", "a", "b"}, {"const", "a", "b"},
                                            {"Crash:a", "NearCrash:b"})
                   : testsupport::layout_of({"const", "a", "b"}, {"const", "a", "b"});
  if (traits(c).scale_covariates) s.scale_covariates = {"z"};
  return s;
}

ParameterSet random_parameters(const ModelSpec& s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1), pos(0.1, 1.2), k(0.1, 0.9);
  ParameterSet p = zero_parameters(s);
  for (auto& b : p.beta) b = u(rng);
  for (auto& w : p.omega_sd) w = pos(rng);
  for (auto& t : p.theta) t = 0.5 * u(rng);
  if (traits(s.model_class).scale) p.tau = pos(rng);
  if (traits(s.model_class).free_kappa) p.kappa = k(rng);
  return p;
}

/// Central difference of the log-likelihood along each natural parameter.
Eigen::VectorXd numeric_gradient(const ModelStructure& m, const ParameterSet& p,
                                 const ChoiceDataset& d, const DrawBlock& draws, double h) {
  const Eigen::VectorXd x = m.pack(p);
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd up = x, dn = x;
    up[i] += h;
    dn[i] -= h;
    g[i] = (detail::log_likelihood_unchecked(m, m.unpack(up), d, draws, false).loglik -
            detail::log_likelihood_unchecked(m, m.unpack(dn), d, draws, false).loglik) /
           (2 * h);
  }
  return g;
}

}  // namespace

TEST_CASE("halton sequences") {
  const auto h2 = halton_sequence(2, 7);
  const std::vector<double> want2{0.5, 0.25, 0.75, 0.125, 0.625, 0.375, 0.875};
  for (std::size_t i = 0; i < 7; ++i) CHECK(h2[i] == want2[i]);
  const auto h3 = halton_sequence(3, 4, 2);
  CHECK(h3[0] == doctest::Approx(1.0 / 9));
  CHECK(h3[1] == doctest::Approx(4.0 / 9));
  CHECK_THROWS_AS(halton_sequence(4, 3), InvalidParameter);
  CHECK(first_primes(6) == std::vector<unsigned>{2, 3, 5, 7, 11, 13});
  CHECK(is_prime(97));
  CHECK_FALSE(is_prime(91));
}

TEST_CASE("draw blocks are deterministic and well spread") {
  const DrawBlock a(30, 200, 2, DrawScheme::Halton, 7);
  const DrawBlock b(30, 200, 2, DrawScheme::Halton, 7);
  const DrawBlock c(30, 200, 2, DrawScheme::Halton, 8);
  double mean = 0, sq = 0;
  bool differs = false;
  for (std::size_t i = 0; i < 30; ++i) {
    for (std::size_t k = 0; k < 2; ++k) {
      const auto x = a.event(i).column(k), y = b.event(i).column(k), z = c.event(i).column(k);
      for (std::size_t r = 0; r < 200; ++r) {
        CHECK(x[r] == y[r]);
        differs |= x[r] != z[r];
        mean += x[r];
        sq += x[r] * x[r];
      }
    }
  }
  CHECK(differs);
  const double n = 30 * 2 * 200;
  CHECK(std::abs(mean / n) < 0.02);
  CHECK(std::abs(sq / n - 1) < 0.05);

  const DrawBlock p(5, 1000, 1, DrawScheme::PseudoRandom, 3);
  double pm = 0;
  for (std::size_t i = 0; i < 5; ++i) {
    for (double v : p.event(i).column(0)) pm += v;
  }
  CHECK(std::abs(pm / 5000) < 0.05);
}

TEST_CASE("parameter packing round trips and names are distinct") {
  const auto s = spec_for(ModelClass::H_GMNL);
  ModelStructure m(s);
  CHECK(m.parameter_count() == 6 + 2 + 1 + 1 + 1);
  std::mt19937_64 rng(1);
  const auto p = random_parameters(s, rng);
  const auto q = m.unpack(m.pack(p));
  CHECK(q.beta == p.beta);
  CHECK(q.omega_sd == p.omega_sd);
  CHECK(q.theta == p.theta);
  CHECK(q.tau == p.tau);
  CHECK(q.kappa == p.kappa);
  const auto names = m.parameter_names();
  CHECK(std::set<std::string>(names.begin(), names.end()).size() == names.size());
  CHECK(names.front() == "Crash:const");
  CHECK(names.back() == "kappa");
}

TEST_CASE("MNL likelihood matches a direct computation") {
  const auto d = toy_data(200, 3);
  const auto s = spec_for(ModelClass::MNL);
  std::mt19937_64 rng(2);
  const auto p = random_parameters(s, rng);
  const auto draws = make_draws(s, d.size());
  double want = 0;
  for (const auto& e : d.events) {
    double vc = 0, vn = 0;
    for (int j = 0; j < 3; ++j) {
      vc += p.beta[j] * e.x_crash[j];
      vn += p.beta[3 + j] * e.x_nearcrash[j];
    }
    want += std::log(testsupport::logit3(vn, vc)[static_cast<int>(e.observed)]);
  }
  CHECK(log_likelihood(s, p, d, draws) == doctest::Approx(want).epsilon(1e-13));
}

TEST_CASE("analytic score matches central differences for every class") {
  std::mt19937_64 rng(9);
  for (auto c : {ModelClass::MNL, ModelClass::RP_MNL, ModelClass::S_MNL, ModelClass::HS_MNL,
                 ModelClass::GMNL_I, ModelClass::GMNL_II, ModelClass::H_GMNL}) {
    CAPTURE(to_string(c));
    const auto d = toy_data(150, 5, traits(c).scale_covariates);
    const auto s = spec_for(c);
    ModelStructure m(s);
    const auto draws = make_draws(s, d.size());
    for (int rep = 0; rep < 3; ++rep) {
      const auto p = random_parameters(s, rng);
      const auto analytic = log_likelihood(m, p, d, draws, true).gradient;
      const auto numeric = numeric_gradient(m, p, d, draws, 1e-5);
      for (Eigen::Index i = 0; i < analytic.size(); ++i) {
        CAPTURE(m.parameter_names()[i]);
        CHECK(std::abs(analytic[i] - numeric[i]) <= 1e-5 * (1 + std::abs(numeric[i])));
      }
    }
  }
}

TEST_CASE("per-event scores sum to the gradient") {
  const auto d = toy_data(90, 6, true);
  const auto s = spec_for(ModelClass::H_GMNL);
  ModelStructure m(s);
  std::mt19937_64 rng(4);
  const auto p = random_parameters(s, rng);
  const auto draws = make_draws(s, d.size());
  const Eigen::MatrixXd S = event_scores(m, p, d, draws);
  const Eigen::VectorXd g = log_likelihood(m, p, d, draws, true).gradient;
  CHECK(S.rows() == 90);
  CHECK((S.colwise().sum().transpose() - g).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("one random coefficient matches Gauss-Hermite quadrature") {
  const auto gh = testsupport::gauss_hermite(64);
  CHECK(testsupport::expect_normal(gh, [](double z) { return z * z; }) ==
        doctest::Approx(1.0).epsilon(1e-12));
  ModelSpec s;
  s.model_class = ModelClass::RP_MNL;
  s.layout = testsupport::layout_of({"const", "a"}, {"const"}, {"Crash:a"});
  s.draws = 10000;
  ModelStructure m(s);
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.5, 1.5), sd(0.05, 2.0);
  const DrawBlock draws(1, s.draws, 1, DrawScheme::Halton, 77);
  double worst = 0;
  for (int rep = 0; rep < 25; ++rep) {
    EventRecord e;
    e.x_crash = {1.0, u(rng)};
    e.x_nearcrash = {1.0};
    ParameterSet p = zero_parameters(s);
    p.beta = {u(rng), u(rng), u(rng)};
    p.omega_sd = {sd(rng)};
    const auto sim = simulated_probability(m, p, e, draws.event(0));
    const double vn = p.beta[2];
    const double oracle = testsupport::expect_normal(gh, [&](double z) {
      const double vc = p.beta[0] + (p.beta[1] + p.omega_sd[0] * z) * e.x_crash[1];
      return testsupport::logit3(vn, vc)[2];
    });
    worst = std::max(worst, std::abs(sim.crash - oracle));
  }
  CHECK(worst < 1e-3);
}

TEST_CASE("null log-likelihood and the intercept-only optimum") {
  std::vector<std::vector<double>> x(4, std::vector<double>{1.0});
  const std::vector<Outcome> y{Outcome::Baseline, Outcome::Baseline, Outcome::NearCrash,
                               Outcome::Crash};
  const auto d = testsupport::make_choice_data(x, y, {"const"});
  const double closed = 2 * std::log(0.5) + 2 * std::log(0.25);
  CHECK(null_log_likelihood(d) == doctest::Approx(closed).epsilon(1e-14));

  ModelSpec s;
  s.layout = testsupport::layout_of({"const"}, {"const"});
  const auto draws = make_draws(s, d.size());
  // Exhaustive grid, then successively finer grids around the best point.
  double best = -1e300, bc = 0, bn = 0, span = 5;
  for (int level = 0; level < 8; ++level) {
    const double c0 = bc, n0 = bn;
    for (int i = -50; i <= 50; ++i) {
      for (int j = -50; j <= 50; ++j) {
        ParameterSet p = zero_parameters(s);
        p.beta = {c0 + span * i / 50.0, n0 + span * j / 50.0};
        const double ll = log_likelihood(s, p, d, draws);
        if (ll > best) {
          best = ll;
          bc = p.beta[0];
          bn = p.beta[1];
        }
      }
    }
    span /= 10;
  }
  const auto fitted = fit(s, d);
  CHECK(fitted.loglik == doctest::Approx(best).epsilon(1e-6));
  CHECK(std::abs(fitted.loglik - best) < 1e-6);
  CHECK(std::abs(best - closed) < 1e-9);
}

TEST_CASE("likelihood does not depend on the thread count") {
  const auto d = toy_data(1000, 8, true);
  const auto s = spec_for(ModelClass::H_GMNL, 30);
  ModelStructure m(s);
  std::mt19937_64 rng(4);
  const auto p = random_parameters(s, rng);
  const auto draws = make_draws(s, d.size());
  const unsigned saved = thread_count();
  set_thread_count(1);
  const auto a = log_likelihood(m, p, d, draws, true);
  set_thread_count(8);
  const auto b = log_likelihood(m, p, d, draws, true);
  set_thread_count(saved);
  CHECK(a.loglik == b.loglik);
  CHECK(a.gradient == b.gradient);
}

TEST_CASE("bad parameters are rejected") {
  const auto d = toy_data(10, 1);
  const auto s = spec_for(ModelClass::RP_MNL);
  const auto draws = make_draws(s, d.size());
  auto p = zero_parameters(s);
  p.omega_sd[0] = -1;
  CHECK_THROWS_AS(log_likelihood(s, p, d, draws), InvalidParameter);
  p = zero_parameters(s);
  p.beta.pop_back();
  CHECK_THROWS_AS(log_likelihood(s, p, d, draws), InvalidParameter);
}

TEST_CASE("small documented cases") {
  const auto h3 = halton_sequence(3, 2);
  CHECK(h3[0] == doctest::Approx(1.0 / 3));
  CHECK(h3[1] == doctest::Approx(2.0 / 3));
  CHECK(halton_sequence(5, 0).empty());

  std::vector<std::vector<double>> x{{1.0}};
  const auto d = testsupport::make_choice_data(x, {Outcome::NearCrash}, {"const"});
  ModelSpec s;
  s.layout = testsupport::layout_of({"const"}, {"const"});
  const auto draws = make_draws(s, 1);
  CHECK(log_likelihood(s, zero_parameters(s), d, draws) == doctest::Approx(std::log(1.0 / 3)));

  // Three events with hand-set utilities: P(obs) = 1/3, e/(2+e), 1/(2+e).
  std::vector<std::vector<double>> x3{{0.0}, {1.0}, {1.0}};
  const auto d3 = testsupport::make_choice_data(
      x3, {Outcome::Crash, Outcome::Crash, Outcome::Baseline}, {"v"});
  ModelSpec s3;
  s3.layout = testsupport::layout_of({"v"}, {"v"});
  ParameterSet p3 = zero_parameters(s3);
  p3.beta = {1.0, 0.0};
  const double e = std::exp(1.0);
  CHECK(log_likelihood(s3, p3, d3, make_draws(s3, 3)) ==
        doctest::Approx(std::log(1.0 / 3) + std::log(e / (2 + e)) + std::log(1 / (2 + e))));
}

TEST_CASE("Halton and pseudo-random simulation converge to each other") {
  const auto d = toy_data(40, 12, true);
  auto s = spec_for(ModelClass::H_GMNL);
  ModelStructure m(s);
  std::mt19937_64 rng(13);
  const auto p = random_parameters(s, rng);
  double previous = 1e9;
  for (std::size_t draws : {100, 1000, 10000}) {
    const DrawBlock h(d.size(), draws, draw_dimensions(s), DrawScheme::Halton, 5);
    const DrawBlock r(d.size(), draws, draw_dimensions(s), DrawScheme::PseudoRandom, 5);
    double gap = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const auto a = simulated_probability(m, p, d.events[i], h.event(i));
      const auto b = simulated_probability(m, p, d.events[i], r.event(i));
      CHECK(std::abs(a.baseline + a.nearcrash + a.crash - 1) < 1e-12);
      gap = std::max(gap, std::abs(a.crash - b.crash));
    }
    CAPTURE(draws);
    CHECK(gap < previous);
    previous = gap;
  }
  CHECK(previous < 0.01);
}
