#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "volatix/error.hpp"
#include "volatix/io.hpp"
#include "volatix/json_io.hpp"
#include "volatix/synthetic.hpp"
#include "support.hpp"

using namespace volatix;

namespace {

io::CsvTable csv(const std::string& text) {
  std::istringstream in(text);
  return io::parse_csv(in, "test.csv");
}

std::string shifted_traces(double offset) {
  std::ostringstream os;
  os << "event_id,event_type,t_sec,speed_kph,accel_long_mps2,accel_lat_mps2\n";
  const double al[] = {0.5, -0.2, 0.9, 0.1, -0.6, 0.4, 0.3, -0.1};
  const double at[] = {0.1, 0.3, -0.4, 0.2, 0.5, -0.3, 0.0, 0.6};
  for (int i = 0; i < 8; ++i) {
    os << "a,Baseline," << io::format_number(offset + 0.1 * i) << "," << 40 + i << "," << al[i]
       << "," << at[i] << "\n";
  }
  return os.str();
}

}  // namespace

TEST_CASE("csv parsing handles quotes and CRLF") {
  const auto t = csv("a,b,c\r\n1,\"x,y\",\"he said \"\"hi\"\"\"\r\n\r\n2,,3\n");
  CHECK(t.header == std::vector<std::string>{"a", "b", "c"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0][1] == "x,y");
  CHECK(t.rows[0][2] == "he said \"hi\"");
  CHECK(t.rows[1][1].empty());
  CHECK(t.line_numbers[1] == 4);
  CHECK_THROWS_AS(t.require_column("d", "test.csv"), SchemaError);
  CHECK_THROWS_AS(csv("a,b\n1,2,3\n"), SchemaError);
}

TEST_CASE("numbers survive a write/read cycle exactly") {
  for (double v : {0.1, 1.0 / 3, -2.5e-300, 12345.678901234567, 0.0}) {
    CHECK(io::parse_number(io::format_number(v), "s", 1, "c") == v);
  }
  try {
    io::parse_number("12x", "traces.csv", 7, "t_sec");
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    const std::string what = e.what();
    CHECK(what.find("t_sec") != std::string::npos);
    CHECK(what.find(":7") != std::string::npos);
  }
  CHECK_THROWS_AS(io::parse_number("", "s", 1, "c"), SchemaError);
  CHECK_THROWS_AS(io::parse_number("nan", "s", 1, "c"), SchemaError);
}

TEST_CASE("trace ingestion maps marker times to indices") {
  const auto traces = csv(
      "event_id,event_type,t_sec,speed_kph,accel_long_mps2,accel_lat_mps2\n"
      "c1,Crash,0,30,0.1,0\n"
      "c1,Crash,0.1,31,0.2,0\n"
      "c1,Crash,0.2,32,0.3,0\n"
      "c1,Crash,0.3,33,0.1,0\n"
      "c1,Crash,0.4,34,0.2,0\n");
  const auto events = csv("event_id,reaction_t_sec,impact_t_sec\nc1,0.3,0.4\n");
  const auto in = io::read_traces(traces, &events);
  REQUIRE(in.traces.size() == 1);
  CHECK(in.traces[0].reaction_index == 3u);
  CHECK(in.traces[0].impact_index == 4u);
  CHECK(in.traces[0].sample_period == doctest::Approx(0.1));
  CHECK(in.rejects.empty());
}

TEST_CASE("non-uniform sampling is rejected, not resampled") {
  const auto traces = csv(
      "event_id,event_type,t_sec,speed_kph,accel_long_mps2,accel_lat_mps2\n"
      "g,Baseline,0,30,0.1,0\n"
      "g,Baseline,0.1,30,0.1,0\n"
      "g,Baseline,0.3,30,0.1,0\n"
      "ok,Baseline,0,30,0.1,0\n"
      "ok,Baseline,0.1,30,0.1,0\n");
  const auto in = io::read_traces(traces, nullptr);
  REQUIRE(in.rejects.size() == 1);
  CHECK(in.rejects[0].event_id == "g");
  CHECK(in.traces.size() == 1);
}

TEST_CASE("malformed timestamp names the column") {
  const auto traces = csv(
      "event_id,event_type,t_sec,speed_kph,accel_long_mps2,accel_lat_mps2\n"
      "a,Baseline,zero,30,0.1,0\n");
  try {
    io::read_traces(traces, nullptr);
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("t_sec") != std::string::npos);
  }
}

TEST_CASE("shifting timestamps leaves every index unchanged") {
  const auto a = io::read_traces(csv(shifted_traces(0.0)), nullptr);
  const auto b = io::read_traces(csv(shifted_traces(1234.5)), nullptr);
  const auto va = volatility_indices(a.traces[0]).fields();
  const auto vb = volatility_indices(b.traces[0]).fields();
  for (std::size_t i = 0; i < va.size(); ++i) {
    REQUIRE(va[i].has_value() == vb[i].has_value());
    if (va[i]) CHECK(std::abs(*va[i] - *vb[i]) < 1e-9);
  }
}

TEST_CASE("generated traces round trip through the CSV schema") {
  TraceGeneratorConfig cfg;
  cfg.n_baseline = 4;
  cfg.n_crash = 3;
  cfg.samples = 120;
  cfg.seed = 5;
  const auto traces = generate_traces(cfg);
  std::ostringstream t, e;
  io::write_traces(t, traces);
  io::write_events(e, traces);
  const auto tcsv = csv(t.str());
  const auto ecsv = csv(e.str());
  const auto back = io::read_traces(tcsv, &ecsv);
  REQUIRE(back.traces.size() == traces.size());
  for (std::size_t i = 0; i < traces.size(); ++i) {
    CHECK(back.traces[i].event_id == traces[i].event_id);
    CHECK(back.traces[i].speed_kph == traces[i].speed_kph);
    CHECK(back.traces[i].accel_lat == traces[i].accel_lat);
    CHECK(back.traces[i].impact_index == traces[i].impact_index);
    CHECK(back.traces[i].reaction_index == traces[i].reaction_index);
  }
}

TEST_CASE("feature rows round trip with missing cells") {
  VolatilityVector v;
  v.cv_accel_long = 0.5;
  v.cv_jerk_neg_lat = 1.25;
  v.mean_speed = 42.0;
  std::ostringstream os;
  io::write_features(os, {{"e1", EventType::NearCrash, v}});
  const auto k = io::read_features(csv(os.str()));
  REQUIRE(k.rows.size() == 1);
  CHECK(k.labels[0] == "NearCrash");
  CHECK(k.columns.size() == 10);
  CHECK(k.rows[0][0] == 0.5);
  CHECK(std::isnan(k.rows[0][1]));
  CHECK(k.rows[0][8] == 42.0);
}

TEST_CASE("joining features and attributes") {
  const auto features = io::read_features(csv(
      "event_id,event_type,cv_jerk_pos_long\n"
      "a,Crash,1.1\n"
      "b,Baseline,0.9\n"));
  SUBCASE("complete join takes outcomes from the feature event type") {
    const auto attrs = io::read_attributes(csv("event_id,school_zone\nb,1\na,0\n"));
    const auto t = io::join(&features, attrs);
    CHECK(t.event_ids == std::vector<std::string>{"b", "a"});
    CHECK(t.observed[1] == Outcome::Crash);
    CHECK(t.columns == std::vector<std::string>{"cv_jerk_pos_long", "school_zone"});
    CHECK(t.rows[0] == std::vector<double>{0.9, 1.0});
  }
  SUBCASE("orphans on either side are listed") {
    const auto attrs = io::read_attributes(csv("event_id,school_zone\na,0\nzz,1\n"));
    try {
      io::join(&features, attrs);
      FAIL("expected JoinError");
    } catch (const JoinError& e) {
      const std::string what = e.what();
      CHECK(what.find("zz") != std::string::npos);
      CHECK(what.find("b") != std::string::npos);
    }
  }
  SUBCASE("attributes alone need an outcome column") {
    const auto attrs = io::read_attributes(csv("event_id,outcome,x\na,nearcrash,2\n"));
    const auto t = io::join(nullptr, attrs);
    CHECK(t.observed[0] == Outcome::NearCrash);
  }
}

TEST_CASE("synthetic attributes round trip") {
  GeneratorConfig g;
  g.spec.layout = testsupport::layout_of({"const", "x"}, {"const"});
  g.truth = zero_parameters(g.spec);
  g.n_events = 20;
  g.covariates = {{"x", Distribution::Uniform, 0, 1}};
  const auto s = generate_sample(g);
  std::ostringstream os;
  io::write_attributes(os, s.table);
  const auto t = io::join(nullptr, io::read_attributes(csv(os.str())));
  CHECK(t.rows == s.table.rows);
  CHECK(t.observed == s.table.observed);
}

TEST_CASE("spec and parameter JSON round trip") {
  ModelSpec s;
  s.model_class = ModelClass::H_GMNL;
  s.layout = testsupport::layout_of({"const", "a"}, {"const"}, {"Crash:a"});
  s.scale_covariates = {"z"};
  s.draws = 250;
  s.seed = 99;
  const auto back = json_io::spec_from_json(json_io::to_json(s));
  CHECK(back.model_class == s.model_class);
  CHECK(back.layout.crash[1].random);
  CHECK(back.scale_covariates == s.scale_covariates);
  CHECK(back.draws == 250);
  CHECK(back.seed == 99);

  auto j = json_io::to_json(s);
  j["draws"] = 0;
  CHECK_THROWS_AS(json_io::spec_from_json(j), InvalidParameter);
  j = json_io::to_json(s);
  j["class"] = "probit";
  CHECK_THROWS_AS(json_io::spec_from_json(j), InvalidParameter);

  ParameterSet p = zero_parameters(s);
  p.beta = {0.1, -0.2, 0.3};
  p.omega_sd = {0.4};
  p.theta = {0.5};
  p.tau = 0.6;
  p.kappa = 0.7;
  const auto q = json_io::parameters_from_json(json_io::to_json(p));
  CHECK(q.beta == p.beta);
  CHECK(q.kappa == p.kappa);
}
