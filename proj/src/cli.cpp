#include "volatix/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "volatix/error.hpp"
#include "volatix/estimation.hpp"
#include "volatix/inference.hpp"
#include "volatix/io.hpp"
#include "volatix/json_io.hpp"
#include "volatix/kinematics.hpp"
#include "volatix/parallel.hpp"
#include "volatix/synthetic.hpp"

namespace volatix::cli {

namespace fs = std::filesystem;
using json_io::json;

namespace {

enum class LogLevel { Quiet = 0, Warn = 1, Info = 2, Debug = 3 };

LogLevel log_level() {
  const char* env = std::getenv("VOLATIX_LOG");
  if (env == nullptr) return LogLevel::Info;
  const std::string v(env);
  if (v == "quiet" || v == "off" || v == "0") return LogLevel::Quiet;
  if (v == "warn" || v == "1") return LogLevel::Warn;
  if (v == "debug" || v == "3") return LogLevel::Debug;
  return LogLevel::Info;
}

class Logger {
 public:
  explicit Logger(std::ostream& err) : err_(err), level_(log_level()) {}
  void warn(const std::string& m) const {
    if (level_ >= LogLevel::Warn) err_ << "warning: " << m << '\n';
  }
  void info(const std::string& m) const {
    if (level_ >= LogLevel::Info) err_ << m << '\n';
  }

 private:
  std::ostream& err_;
  LogLevel level_;
};

struct Globals {
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::string format = "csv";
};

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("cannot write " + path);
  out << content;
}

/// Records what produced a set of outputs. Thread count is deliberately
/// absent: it never changes results.
void write_manifest(const std::string& manifest_path, const std::string& command,
                    const std::vector<std::string>& inputs, const std::vector<std::string>& outputs,
                    const json& settings) {
  json in = json::array(), out = json::array();
  for (const auto& p : inputs) in.push_back({{"path", p}, {"fnv1a64", fnv1a_hex(slurp(p))}});
  for (const auto& p : outputs) out.push_back({{"path", p}, {"fnv1a64", fnv1a_hex(slurp(p))}});
  const json m = {{"command", command},
                  {"tool", "volatix"},
                  {"version", VOLATIX_VERSION},
                  {"settings", settings},
                  {"inputs", in},
                  {"outputs", out}};
  write_file(manifest_path, m.dump(2) + "\n");
}

std::string manifest_path_for(const std::string& output) { return output + ".manifest.json"; }

std::string join_names(const std::vector<std::string>& names) {
  std::string s;
  for (std::size_t i = 0; i < names.size(); ++i) s += (i ? ", " : "") + names[i];
  return s;
}

// ---------------------------------------------------------------- featurize

struct FeaturizeArgs {
  std::string traces, events, out, rejects;
};

int cmd_featurize(const FeaturizeArgs& a, const Globals&, std::ostream& out, const Logger& log) {
  const std::string traces_bytes = slurp(a.traces);
  std::vector<io::FeatureRow> rows;
  std::vector<io::Reject> rejects;
  std::vector<std::string> inputs{a.traces};

  const bool empty = std::all_of(traces_bytes.begin(), traces_bytes.end(),
                                 [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
  if (empty) {
    log.warn("trace file " + a.traces + " is empty; writing an empty feature table");
  } else {
    std::istringstream in(traces_bytes);
    const io::CsvTable traces = io::parse_csv(in, a.traces);
    std::optional<io::CsvTable> events;
    if (!a.events.empty()) {
      events = io::read_csv(a.events);
      inputs.push_back(a.events);
    }
    io::TraceInput input = io::read_traces(traces, events ? &*events : nullptr);
    for (const auto& w : input.warnings) log.warn(w);
    if (input.traces.empty() && input.rejects.empty()) {
      log.warn("trace file " + a.traces + " has no samples; writing an empty feature table");
    }
    rejects = input.rejects;

    std::vector<std::optional<VolatilityVector>> features(input.traces.size());
    std::vector<std::string> reasons(input.traces.size());
    parallel_for(input.traces.size(), [&](std::size_t i) {
      try {
        features[i] = volatility_indices(input.traces[i]);
      } catch (const Error& e) {
        reasons[i] = e.what();
      }
    });
    for (std::size_t i = 0; i < input.traces.size(); ++i) {
      if (features[i]) {
        rows.push_back({input.traces[i].event_id, input.traces[i].event_type, *features[i]});
      } else {
        rejects.push_back({input.traces[i].event_id, reasons[i]});
      }
    }
  }

  std::ostringstream fcsv, rcsv;
  io::write_features(fcsv, rows);
  io::write_rejects(rcsv, rejects);
  const std::string rejects_path = a.rejects.empty() ? a.out + ".rejects.csv" : a.rejects;
  write_file(a.out, fcsv.str());
  write_file(rejects_path, rcsv.str());
  write_manifest(manifest_path_for(a.out), "featurize", inputs, {a.out, rejects_path}, json::object());
  out << "featurize: " << rows.size() << " events, " << rejects.size() << " rejected\n";
  if (!rejects.empty()) log.warn(std::to_string(rejects.size()) + " events rejected; see " + rejects_path);
  return kExitOk;
}

// ---------------------------------------------------------------- data loading

struct DataArgs {
  std::string features, attributes;
};

/// Joins the inputs and keeps events whose model covariates are all present.
ChoiceDataset load_dataset(const DataArgs& a, const ModelSpec& spec, const Logger& log,
                           std::vector<std::string>& inputs) {
  std::optional<io::KeyedTable> features;
  if (!a.features.empty()) {
    features = io::read_features(io::read_csv(a.features));
    inputs.push_back(a.features);
  }
  const io::KeyedTable attributes = io::read_attributes(io::read_csv(a.attributes));
  inputs.push_back(a.attributes);
  CovariateTable table = io::join(features ? &*features : nullptr, attributes);

  std::vector<std::size_t> used;
  const auto need = [&](const std::string& name) {
    if (name == kConstant) return;
    const auto idx = table.column_index(name);
    if (!idx) {
      throw LayoutError("model covariate '" + name + "' not found; available: " +
                        join_names(table.columns));
    }
    used.push_back(*idx);
  };
  for (const auto& c : spec.layout.crash) need(c.name);
  for (const auto& c : spec.layout.nearcrash) need(c.name);
  for (const auto& z : spec.scale_covariates) need(z);

  CovariateTable kept;
  kept.columns = table.columns;
  std::size_t dropped = 0;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const bool complete = std::all_of(used.begin(), used.end(),
                                      [&](std::size_t j) { return std::isfinite(table.rows[i][j]); });
    if (!complete) {
      ++dropped;
      continue;
    }
    kept.event_ids.push_back(table.event_ids[i]);
    kept.observed.push_back(table.observed[i]);
    kept.rows.push_back(std::move(table.rows[i]));
  }
  if (dropped > 0) {
    log.warn(std::to_string(dropped) + " events dropped for missing model covariates");
  }
  return make_dataset(kept, spec);
}

// ---------------------------------------------------------------- fit

struct FitArgs {
  DataArgs data;
  std::string spec, out;
  std::size_t max_iterations = 500;
  std::size_t starts = 0;
  bool standardize = false;
};

void print_summary(std::ostream& out, const FitResult& f) {
  out << "Model: " << to_string(f.spec.model_class) << "\n";
  out << std::left << std::setw(40) << "Parameter" << std::right << std::setw(12) << "Beta"
      << std::setw(10) << "z-stat" << "\n";
  const auto& se = f.se();
  for (std::size_t i = 0; i < f.parameter_names.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    const double est = f.estimate_vector[ii];
    out << std::left << std::setw(40) << f.parameter_names[i] << std::right << std::fixed
        << std::setprecision(3) << std::setw(12) << est;
    if (f.errors.available() && se[ii] > 0) {
      out << std::setw(10) << std::setprecision(2) << est / se[ii];
    } else {
      out << std::setw(10) << "---";
    }
    out << "\n";
  }
  out << std::defaultfloat << std::setprecision(6);
  out << "Log-likelihood            " << f.loglik << "\n";
  out << "McFadden pseudo R^2       " << f.pseudo_r2 << "\n";
  out << "Number of parameters      " << f.parameter_count << "\n";
  out << "N                         " << f.n_events << "\n";
  out << "AIC                       " << f.aic << "\n";
  out << "Converged                 " << (f.converged ? "yes" : "no") << "\n";
}

int cmd_fit(const FitArgs& a, const Globals& g, std::ostream& out, const Logger& log) {
  ModelSpec spec = json_io::spec_from_json(json_io::read_file(a.spec));
  if (g.seed) spec.seed = *g.seed;
  std::vector<std::string> inputs{a.spec};
  const ChoiceDataset data = load_dataset(a.data, spec, log, inputs);

  FitOptions opts;
  opts.max_iterations = a.max_iterations;
  opts.starts = a.starts;
  opts.standardize = a.standardize;
  opts.log = [&log](const std::string& m) { log.info(m); };
  const FitResult result = fit(spec, data, opts);

  json j = json_io::to_json(result);
  j["warning_count"] = result.warnings.size();
  write_file(a.out, j.dump(2) + "\n");
  write_manifest(manifest_path_for(a.out), "fit", inputs, {a.out},
                 {{"seed", spec.seed},
                  {"max_iterations", a.max_iterations},
                  {"starts", a.starts},
                  {"standardize", a.standardize}});
  print_summary(out, result);
  for (const auto& w : result.warnings) log.warn(w);
  return kExitOk;
}

// ---------------------------------------------------------------- post-estimation

struct PostArgs {
  std::string fit_path;
  DataArgs data;
  std::string out;
  bool force = false;
};

struct Loaded {
  FitResult fit;
  ChoiceDataset data;
  std::vector<std::string> inputs;
};

Loaded load_post(const PostArgs& a, const Logger& log) {
  Loaded l;
  l.fit = json_io::fit_from_json(json_io::read_file(a.fit_path));
  l.inputs.push_back(a.fit_path);
  l.data = load_dataset(a.data, l.fit.spec, log, l.inputs);
  return l;
}

bool check_covariate(const std::string& name, const ModelSpec& spec, std::ostream& err) {
  const auto valid = model_covariates(spec);
  if (std::find(valid.begin(), valid.end(), name) != valid.end()) return true;
  err << "error: unknown covariate '" << name << "'; valid names: " << join_names(valid) << "\n";
  return false;
}

int cmd_effects(const PostArgs& a, const Globals& g, std::ostream& out, const Logger& log) {
  const Loaded l = load_post(a, log);
  const auto table = marginal_effects(l.fit, l.data, {.allow_unconverged = a.force});
  std::ostringstream s;
  if (g.format == "json") {
    s << json_io::to_json(table).dump(2) << "\n";
  } else {
    s << "covariate,type,baseline,nearcrash,crash\n";
    for (const auto& r : table.rows) {
      s << r.covariate << ',' << (r.discrete ? "discrete" : "continuous");
      for (const double e : r.effect) s << ',' << io::format_number(e);
      s << '\n';
    }
  }
  write_file(a.out, s.str());
  write_manifest(manifest_path_for(a.out), "effects", l.inputs, {a.out}, {{"format", g.format}});
  out << "effects: " << table.rows.size() << " covariates\n";
  return kExitOk;
}

struct CurveArgs {
  PostArgs post;
  std::string covariate;
  std::string grid;    // lo:hi:n
  std::string values;  // comma-separated
};

std::vector<double> parse_grid(const CurveArgs& a) {
  std::vector<double> grid;
  if (!a.values.empty()) {
    std::stringstream ss(a.values);
    std::string cell;
    while (std::getline(ss, cell, ',')) grid.push_back(io::parse_number(cell, "--values", 0, "values"));
    return grid;
  }
  std::stringstream ss(a.grid);
  std::string lo_s, hi_s, n_s;
  if (!std::getline(ss, lo_s, ':') || !std::getline(ss, hi_s, ':') || !std::getline(ss, n_s)) {
    throw InvalidParameter("--grid expects lo:hi:n");
  }
  const double lo = io::parse_number(lo_s, "--grid", 0, "lo");
  const double hi = io::parse_number(hi_s, "--grid", 0, "hi");
  const double nd = io::parse_number(n_s, "--grid", 0, "n");
  if (nd < 1 || nd != std::floor(nd)) throw InvalidParameter("--grid point count must be >= 1");
  const auto n = static_cast<std::size_t>(nd);
  for (std::size_t i = 0; i < n; ++i) {
    grid.push_back(n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  return grid;
}

int cmd_curve(const CurveArgs& a, const Globals& g, std::ostream& out, std::ostream& err,
              const Logger& log) {
  const Loaded l = load_post(a.post, log);
  if (!check_covariate(a.covariate, l.fit.spec, err)) return kExitInput;
  const auto grid = parse_grid(a);
  const auto curve =
      probability_curve(l.fit, l.data, a.covariate, grid, {.allow_unconverged = a.post.force});
  for (const auto& w : curve.warnings) log.warn(w);
  std::ostringstream s;
  if (g.format == "json") {
    s << json_io::to_json(curve).dump(2) << "\n";
  } else {
    s << "grid_value,outcome,mean_probability\n";
    for (std::size_t i = 0; i < curve.grid.size(); ++i) {
      for (const auto o : kOutcomes) {
        s << io::format_number(curve.grid[i]) << ',' << to_string(o) << ','
          << io::format_number(curve.mean_probability[i][o]) << '\n';
      }
    }
  }
  write_file(a.post.out, s.str());
  write_manifest(manifest_path_for(a.post.out), "curve", l.inputs, {a.post.out},
                 {{"covariate", a.covariate}, {"grid", grid}, {"format", g.format}});
  out << "curve: " << grid.size() << " grid points\n";
  return kExitOk;
}

struct SimulateArgs {
  PostArgs post;
  std::vector<std::string> covariates;
  std::string scheme;
  std::optional<double> percent;
  std::optional<double> sd;
  std::string target = "crash";
  std::optional<double> denominator;
};

int cmd_simulate(const SimulateArgs& a, const Globals& g, std::ostream& out, std::ostream& err,
                 const Logger& log) {
  const Loaded l = load_post(a.post, log);
  const auto target = parse_outcome(a.target);
  if (!target || *target == Outcome::Baseline) {
    err << "error: --target must be crash or nearcrash\n";
    return kExitInput;
  }
  if (a.covariates.empty()) {
    err << "error: at least one --covariate is required\n";
    return kExitInput;
  }
  const int modes = (a.scheme.empty() ? 0 : 1) + (a.percent ? 1 : 0) + (a.sd ? 1 : 0);
  if (modes != 1) {
    err << "error: choose exactly one of --scheme, --percent, --sd\n";
    return kExitInput;
  }
  if (!a.scheme.empty() && a.scheme != "paper") {
    err << "error: unknown scheme '" << a.scheme << "' (supported: paper)\n";
    return kExitInput;
  }
  for (const auto& c : a.covariates) {
    if (!check_covariate(c, l.fit.spec, err)) return kExitInput;
  }

  struct Block {
    std::string covariate;
    std::vector<ScenarioResult> rows;
  };
  std::vector<Block> blocks;
  for (const auto& c : a.covariates) {
    std::vector<Perturbation> ps;
    if (!a.scheme.empty()) {
      ps = paper_scheme(c, *target);
    } else if (a.percent) {
      ps.push_back({c, PerturbationMode::Percent, *a.percent, *target, ""});
    } else {
      ps.push_back({c, PerturbationMode::StandardDeviation, *a.sd, *target, ""});
    }
    blocks.push_back({c, scenario_simulate(l.fit, l.data, ps, a.denominator,
                                           {.allow_unconverged = a.post.force})});
  }

  std::ostringstream s;
  if (g.format == "json") {
    json j = json::array();
    for (const auto& b : blocks) {
      json entry = json_io::to_json(b.rows);
      entry["covariate"] = b.covariate;
      entry["target"] = std::string(to_string(*target));
      j.push_back(entry);
    }
    s << j.dump(2) << "\n";
  } else {
    s << "covariate,scenario";
    for (const char* field : {"share_pct", "count", "delta_share_pct", "delta_count"}) {
      for (const auto o : kOutcomes) s << ',' << field << '_' << to_string(o);
    }
    s << '\n';
    for (const auto& b : blocks) {
      for (const auto& r : b.rows) {
        s << b.covariate << ',' << r.label;
        for (const double v : r.share_pct) s << ',' << io::format_number(v);
        for (const long long v : r.count) s << ',' << v;
        for (const double v : r.delta_share_pct) s << ',' << io::format_number(v);
        for (const long long v : r.delta_count) s << ',' << v;
        s << '\n';
      }
    }
  }
  write_file(a.post.out, s.str());
  json settings = {{"covariates", a.covariates}, {"target", a.target}, {"format", g.format}};
  if (!a.scheme.empty()) settings["scheme"] = a.scheme;
  if (a.percent) settings["percent"] = *a.percent;
  if (a.sd) settings["sd"] = *a.sd;
  if (a.denominator) settings["denominator"] = *a.denominator;
  write_manifest(manifest_path_for(a.post.out), "simulate", l.inputs, {a.post.out}, settings);

  // Human-readable view of the target outcome, one block per covariate.
  const auto k = static_cast<std::size_t>(*target);
  for (const auto& b : blocks) {
    out << b.covariate << " (" << to_string(*target) << " utility)\n";
    out << std::left << std::setw(24) << "Scenario" << std::right << std::setw(10) << "% Share"
        << std::setw(10) << "Count" << std::setw(16) << "% chg shares" << std::setw(12)
        << "chg count" << "\n";
    for (std::size_t i = 0; i < b.rows.size(); ++i) {
      const auto& r = b.rows[i];
      out << std::left << std::setw(24) << r.label << std::right << std::fixed
          << std::setprecision(3) << std::setw(10) << r.share_pct[k] << std::setw(10)
          << r.count[k];
      if (i == 0) {
        out << std::setw(16) << "---" << std::setw(12) << "---";
      } else {
        out << std::setw(16) << r.delta_share_pct[k] << std::setw(12) << r.delta_count[k];
      }
      out << "\n";
    }
    out << std::defaultfloat;
  }
  return kExitOk;
}

// ---------------------------------------------------------------- synth

struct SynthTraceArgs {
  std::string out_dir;
  std::size_t baseline = 50, nearcrash = 10, crash = 5, samples = 300;
  double jerk_magnitude = 1.0, mean_speed = 50.0;
  std::optional<double> cv_pos_long, cv_neg_long, cv_pos_lat, cv_neg_lat;
};

int cmd_synth_traces(const SynthTraceArgs& a, const Globals& g, std::ostream& out) {
  TraceGeneratorConfig cfg;
  cfg.n_baseline = a.baseline;
  cfg.n_nearcrash = a.nearcrash;
  cfg.n_crash = a.crash;
  cfg.samples = a.samples;
  cfg.targets.jerk_magnitude = a.jerk_magnitude;
  cfg.targets.mean_speed_kph = a.mean_speed;
  cfg.targets.cv_jerk_pos_long = a.cv_pos_long;
  cfg.targets.cv_jerk_neg_long = a.cv_neg_long;
  cfg.targets.cv_jerk_pos_lat = a.cv_pos_lat;
  cfg.targets.cv_jerk_neg_lat = a.cv_neg_lat;
  cfg.seed = g.seed.value_or(1);
  const auto traces = generate_traces(cfg);
  std::ostringstream t, e;
  io::write_traces(t, traces);
  io::write_events(e, traces);
  const std::string tp = (fs::path(a.out_dir) / "traces.csv").string();
  const std::string ep = (fs::path(a.out_dir) / "events.csv").string();
  write_file(tp, t.str());
  write_file(ep, e.str());
  write_manifest((fs::path(a.out_dir) / "manifest.json").string(), "synth traces", {}, {tp, ep},
                 {{"seed", cfg.seed},
                  {"baseline", a.baseline},
                  {"nearcrash", a.nearcrash},
                  {"crash", a.crash},
                  {"samples", a.samples}});
  out << "synth: " << traces.size() << " traces written to " << a.out_dir << "\n";
  return kExitOk;
}

struct SynthChoiceArgs {
  std::string config, out_dir;
};

int cmd_synth_choices(const SynthChoiceArgs& a, const Globals& g, std::ostream& out) {
  GeneratorConfig cfg = json_io::generator_from_json(json_io::read_file(a.config));
  if (g.seed) cfg.seed = *g.seed;
  const SyntheticSample sample = generate_sample(cfg);
  std::ostringstream s;
  io::write_attributes(s, sample.table);
  const std::string ap = (fs::path(a.out_dir) / "attributes.csv").string();
  const std::string tp = (fs::path(a.out_dir) / "truth.json").string();
  write_file(ap, s.str());
  write_file(tp, json({{"spec", json_io::to_json(cfg.spec)}, {"truth", json_io::to_json(cfg.truth)}})
                         .dump(2) + "\n");
  write_manifest((fs::path(a.out_dir) / "manifest.json").string(), "synth choices", {a.config},
                 {ap, tp}, {{"seed", cfg.seed}});
  out << "synth: " << sample.table.rows.size() << " events written to " << ap << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"volatix: driving volatility features and generalized mixed logit models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", VOLATIX_VERSION);

  Globals g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Master seed; all randomness derives from it");
  app.add_option("--threads", g.threads, "Worker threads (results do not depend on it)")
      ->check(CLI::PositiveNumber);
  app.add_option("--format", g.format, "Report format")->check(CLI::IsMember({"csv", "json"}));

  FeaturizeArgs fa;
  auto* featurize = app.add_subcommand("featurize", "Volatility indices from raw traces");
  featurize->add_option("--traces", fa.traces, "Long-format trace CSV")->required();
  featurize->add_option("--events", fa.events, "Event sidecar CSV (reaction/impact times)");
  featurize->add_option("--out", fa.out, "Feature CSV to write")->required();
  featurize->add_option("--rejects", fa.rejects, "Rejects CSV (default <out>.rejects.csv)");

  FitArgs fit_args;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a model by maximum simulated likelihood");
  fit_cmd->add_option("--features", fit_args.data.features, "Feature CSV");
  fit_cmd->add_option("--attributes", fit_args.data.attributes, "Event attribute CSV")->required();
  fit_cmd->add_option("--spec", fit_args.spec, "Model spec JSON")->required();
  fit_cmd->add_option("--out", fit_args.out, "Fit result JSON to write")->required();
  fit_cmd->add_option("--max-iterations", fit_args.max_iterations);
  fit_cmd->add_option("--starts", fit_args.starts, "Random starts (0 = class default)");
  fit_cmd->add_flag("--standardize", fit_args.standardize, "Rescale covariates while optimizing");

  const auto add_post = [](CLI::App* cmd, PostArgs& p) {
    cmd->add_option("--fit", p.fit_path, "Fit result JSON")->required();
    cmd->add_option("--features", p.data.features, "Feature CSV");
    cmd->add_option("--attributes", p.data.attributes, "Event attribute CSV")->required();
    cmd->add_option("--out", p.out, "Report to write")->required();
    cmd->add_flag("--force", p.force, "Analyse a fit that did not converge");
  };
  PostArgs effects_args;
  auto* effects = app.add_subcommand("effects", "Average marginal effects");
  add_post(effects, effects_args);

  CurveArgs curve_args;
  auto* curve = app.add_subcommand("curve", "Mean probabilities over a covariate grid");
  add_post(curve, curve_args.post);
  curve->add_option("--covariate", curve_args.covariate)->required();
  auto* grid_opt = curve->add_option("--grid", curve_args.grid, "lo:hi:n");
  auto* values_opt = curve->add_option("--values", curve_args.values, "Comma-separated grid");
  grid_opt->excludes(values_opt);

  SimulateArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "Outcome-share forecasts under perturbations");
  add_post(simulate, sim_args.post);
  simulate->add_option("--covariate", sim_args.covariates, "Covariate to perturb (repeatable)");
  simulate->add_option("--scheme", sim_args.scheme, "'paper': 10-50% and 1-2 SD decreases");
  simulate->add_option("--percent", sim_args.percent, "Decrease by this many percent");
  simulate->add_option("--sd", sim_args.sd, "Decrease by this many standard deviations");
  simulate->add_option("--target", sim_args.target, "Utility to perturb: crash or nearcrash");
  simulate->add_option("--denominator", sim_args.denominator, "Events used for predicted counts");

  auto* synth = app.add_subcommand("synth", "Synthetic traces or choice data");
  synth->require_subcommand(1);
  SynthTraceArgs st;
  auto* synth_traces = synth->add_subcommand("traces", "10 Hz traces with target dispersion");
  synth_traces->add_option("--out-dir", st.out_dir)->required();
  synth_traces->add_option("--baseline", st.baseline);
  synth_traces->add_option("--nearcrash", st.nearcrash);
  synth_traces->add_option("--crash", st.crash);
  synth_traces->add_option("--samples", st.samples);
  synth_traces->add_option("--jerk-magnitude", st.jerk_magnitude);
  synth_traces->add_option("--mean-speed", st.mean_speed);
  synth_traces->add_option("--cv-jerk-pos-long", st.cv_pos_long);
  synth_traces->add_option("--cv-jerk-neg-long", st.cv_neg_long);
  synth_traces->add_option("--cv-jerk-pos-lat", st.cv_pos_lat);
  synth_traces->add_option("--cv-jerk-neg-lat", st.cv_neg_lat);
  SynthChoiceArgs sc;
  auto* synth_choices = synth->add_subcommand("choices", "Choice data from a known model");
  synth_choices->add_option("--config", sc.config, "Generator config JSON")->required();
  synth_choices->add_option("--out-dir", sc.out_dir)->required();

  std::vector<std::string> rev(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(rev.begin(), rev.end());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }
  if (*seed_opt) g.seed = seed;
  set_thread_count(g.threads);

  const Logger log(err);
  try {
    if (*featurize) return cmd_featurize(fa, g, out, log);
    if (*fit_cmd) return cmd_fit(fit_args, g, out, log);
    if (*effects) return cmd_effects(effects_args, g, out, log);
    if (*curve) {
      if (curve_args.grid.empty() && curve_args.values.empty()) {
        err << "error: curve needs --grid or --values\n";
        return kExitInput;
      }
      return cmd_curve(curve_args, g, out, err, log);
    }
    if (*simulate) return cmd_simulate(sim_args, g, out, err, log);
    if (*synth_traces) return cmd_synth_traces(st, g, out);
    if (*synth_choices) return cmd_synth_choices(sc, g, out);
  } catch (const JoinError& e) {
    err << "error: " << e.what() << "\n";
    return kExitJoin;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace volatix::cli
