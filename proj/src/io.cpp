#include "volatix/io.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "volatix/error.hpp"

namespace volatix::io {

std::optional<std::size_t> CsvTable::find_column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) return std::nullopt;
  return static_cast<std::size_t>(it - header.begin());
}

std::size_t CsvTable::require_column(const std::string& name, const std::string& source) const {
  const auto idx = find_column(name);
  if (!idx) throw SchemaError(source + ": missing required column '" + name + "'");
  return *idx;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

CsvTable parse_csv(std::istream& in, const std::string& source) {
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char c = line[i];
      if (quoted) {
        if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else if (c == '"') {
          quoted = false;
        } else {
          field.push_back(c);
        }
      } else if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        fields.push_back(trim(field));
        field.clear();
      } else {
        field.push_back(c);
      }
    }
    if (quoted) throw SchemaError(source + ":" + std::to_string(line_no) + ": unterminated quote");
    fields.push_back(trim(field));
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw SchemaError(source + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(table.header.size()) + " fields, found " +
                        std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
    table.line_numbers.push_back(line_no);
  }
  return table;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open " + path);
  return parse_csv(in, path);
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_number(const std::string& cell, const std::string& source, std::size_t line,
                    const std::string& column) {
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || cell.empty() || !std::isfinite(v)) {
    throw SchemaError(source + ":" + std::to_string(line) + ": column '" + column +
                      "' has non-numeric value '" + cell + "'");
  }
  return v;
}

namespace {

struct Sidecar {
  std::optional<double> reaction_t;
  std::optional<double> impact_t;
};

struct PendingTrace {
  std::string type_label;
  std::vector<double> t, speed, along, alat;
  std::size_t first_line = 0;
};

}  // namespace

TraceInput read_traces(const CsvTable& traces, const CsvTable* events) {
  const std::string src = "traces";
  const std::size_t c_id = traces.require_column("event_id", src);
  const std::size_t c_type = traces.require_column("event_type", src);
  const std::size_t c_t = traces.require_column("t_sec", src);
  const std::size_t c_speed = traces.require_column("speed_kph", src);
  const std::size_t c_al = traces.require_column("accel_long_mps2", src);
  const std::size_t c_at = traces.require_column("accel_lat_mps2", src);

  std::vector<std::string> order;
  std::map<std::string, PendingTrace> pending;
  for (std::size_t r = 0; r < traces.rows.size(); ++r) {
    const auto& row = traces.rows[r];
    const std::size_t line = traces.line_numbers[r];
    const std::string& id = row[c_id];
    if (id.empty()) throw SchemaError(src + ":" + std::to_string(line) + ": empty event_id");
    auto [it, inserted] = pending.try_emplace(id);
    PendingTrace& p = it->second;
    if (inserted) {
      order.push_back(id);
      p.type_label = row[c_type];
      p.first_line = line;
    } else if (row[c_type] != p.type_label) {
      throw SchemaError(src + ":" + std::to_string(line) + ": event " + id +
                        " changes event_type mid-trace");
    }
    p.t.push_back(parse_number(row[c_t], src, line, "t_sec"));
    p.speed.push_back(parse_number(row[c_speed], src, line, "speed_kph"));
    p.along.push_back(parse_number(row[c_al], src, line, "accel_long_mps2"));
    p.alat.push_back(parse_number(row[c_at], src, line, "accel_lat_mps2"));
  }

  TraceInput out;
  std::map<std::string, Sidecar> sidecar;
  if (events) {
    const std::string esrc = "events";
    const std::size_t e_id = events->require_column("event_id", esrc);
    const auto e_react = events->find_column("reaction_t_sec");
    const auto e_impact = events->find_column("impact_t_sec");
    for (std::size_t r = 0; r < events->rows.size(); ++r) {
      const auto& row = events->rows[r];
      const std::size_t line = events->line_numbers[r];
      Sidecar s;
      if (e_react && !row[*e_react].empty()) {
        s.reaction_t = parse_number(row[*e_react], esrc, line, "reaction_t_sec");
      }
      if (e_impact && !row[*e_impact].empty()) {
        s.impact_t = parse_number(row[*e_impact], esrc, line, "impact_t_sec");
      }
      if (!sidecar.emplace(row[e_id], s).second) {
        throw SchemaError(esrc + ":" + std::to_string(line) + ": duplicate event_id " + row[e_id]);
      }
      if (!pending.count(row[e_id])) {
        out.warnings.push_back("events sidecar lists " + row[e_id] + " with no trace rows");
      }
    }
  }

  for (const auto& id : order) {
    PendingTrace& p = pending[id];
    const auto type = parse_event_type(p.type_label);
    if (!type) {
      throw SchemaError(src + ":" + std::to_string(p.first_line) + ": column 'event_type' has " +
                        "unknown value '" + p.type_label + "'");
    }
    if (p.t.size() < 2) {
      out.rejects.push_back({id, "fewer than 2 samples"});
      continue;
    }
    // Sort by time; then require a uniform step.
    std::vector<std::size_t> idx(p.t.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return p.t[a] < p.t[b]; });
    const double t0 = p.t[idx.front()];
    const double dt = p.t[idx[1]] - t0;
    bool uniform = dt > 0.0;
    for (std::size_t k = 1; uniform && k < idx.size(); ++k) {
      const double step = p.t[idx[k]] - p.t[idx[k - 1]];
      uniform = std::abs(step - dt) <= 1e-6 * std::max(1.0, dt) + 1e-9;
    }
    if (!uniform) {
      out.rejects.push_back({id, "non-uniform sampling (gaps or duplicate timestamps)"});
      continue;
    }
    EventTrace tr;
    tr.event_id = id;
    tr.event_type = *type;
    tr.sample_period = dt;
    for (const std::size_t k : idx) {
      tr.speed_kph.push_back(p.speed[k]);
      tr.accel_long.push_back(p.along[k]);
      tr.accel_lat.push_back(p.alat[k]);
    }
    const auto to_index = [&](double t) -> std::optional<std::size_t> {
      const double r = std::round((t - t0) / dt);
      if (r < 0.0 || r >= static_cast<double>(tr.size())) return std::nullopt;
      return static_cast<std::size_t>(r);
    };
    if (const auto s = sidecar.find(id); s != sidecar.end()) {
      if (s->second.reaction_t) {
        tr.reaction_index = to_index(*s->second.reaction_t);
        if (!tr.reaction_index) {
          out.rejects.push_back({id, "reaction time outside the trace"});
          continue;
        }
      }
      if (s->second.impact_t) {
        tr.impact_index = to_index(*s->second.impact_t);
        if (!tr.impact_index) {
          out.rejects.push_back({id, "impact time outside the trace"});
          continue;
        }
      }
    }
    out.traces.push_back(std::move(tr));
  }
  return out;
}

void write_traces(std::ostream& out, const std::vector<EventTrace>& traces) {
  out << "event_id,event_type,t_sec,speed_kph,accel_long_mps2,accel_lat_mps2\n";
  for (const auto& tr : traces) {
    for (std::size_t i = 0; i < tr.size(); ++i) {
      out << tr.event_id << ',' << to_string(tr.event_type) << ','
          << format_number(static_cast<double>(i) * tr.sample_period) << ','
          << format_number(tr.speed_kph[i]) << ',' << format_number(tr.accel_long[i]) << ','
          << format_number(tr.accel_lat[i]) << '\n';
    }
  }
}

void write_events(std::ostream& out, const std::vector<EventTrace>& traces) {
  out << "event_id,reaction_t_sec,impact_t_sec\n";
  for (const auto& tr : traces) {
    out << tr.event_id << ',';
    if (tr.reaction_index) out << format_number(static_cast<double>(*tr.reaction_index) * tr.sample_period);
    out << ',';
    if (tr.impact_index) out << format_number(static_cast<double>(*tr.impact_index) * tr.sample_period);
    out << '\n';
  }
}

void write_features(std::ostream& out, const std::vector<FeatureRow>& rows) {
  out << "event_id,event_type";
  for (const auto name : VolatilityVector::kFieldNames) out << ',' << name;
  out << '\n';
  for (const auto& r : rows) {
    out << r.event_id << ',' << to_string(r.event_type);
    for (const auto& v : r.features.fields()) {
      out << ',';
      if (v) out << format_number(*v);
    }
    out << '\n';
  }
}

void write_rejects(std::ostream& out, const std::vector<Reject>& rejects) {
  out << "event_id,reason\n";
  for (const auto& r : rejects) out << r.event_id << ",\"" << r.reason << "\"\n";
}

namespace {

KeyedTable read_keyed(const CsvTable& csv, const std::string& source,
                      const std::vector<std::string>& label_columns) {
  KeyedTable t;
  const std::size_t c_id = csv.require_column("event_id", source);
  std::optional<std::size_t> c_label;
  for (const auto& l : label_columns) {
    if ((c_label = csv.find_column(l))) break;
  }
  std::vector<std::size_t> numeric;
  for (std::size_t j = 0; j < csv.header.size(); ++j) {
    if (j == c_id || (c_label && j == *c_label)) continue;
    numeric.push_back(j);
    t.columns.push_back(csv.header[j]);
  }
  std::set<std::string> seen;
  for (std::size_t r = 0; r < csv.rows.size(); ++r) {
    const auto& row = csv.rows[r];
    const std::size_t line = csv.line_numbers[r];
    if (!seen.insert(row[c_id]).second) {
      throw SchemaError(source + ":" + std::to_string(line) + ": duplicate event_id " + row[c_id]);
    }
    t.event_ids.push_back(row[c_id]);
    t.labels.push_back(c_label ? row[*c_label] : std::string());
    std::vector<double> values;
    values.reserve(numeric.size());
    for (const std::size_t j : numeric) {
      values.push_back(row[j].empty() ? std::numeric_limits<double>::quiet_NaN()
                                      : parse_number(row[j], source, line, csv.header[j]));
    }
    t.rows.push_back(std::move(values));
  }
  return t;
}

}  // namespace

KeyedTable read_features(const CsvTable& csv) {
  return read_keyed(csv, "features", {"event_type"});
}

KeyedTable read_attributes(const CsvTable& csv) {
  return read_keyed(csv, "attributes", {"outcome"});
}

CovariateTable join(const KeyedTable* features, const KeyedTable& attributes) {
  CovariateTable out;
  std::map<std::string, std::size_t> feature_row;
  if (features) {
    for (std::size_t i = 0; i < features->event_ids.size(); ++i) {
      feature_row[features->event_ids[i]] = i;
    }
    std::vector<std::string> orphans;
    std::set<std::string> attr_ids(attributes.event_ids.begin(), attributes.event_ids.end());
    for (const auto& id : attributes.event_ids) {
      if (!feature_row.count(id)) orphans.push_back(id);
    }
    for (const auto& id : features->event_ids) {
      if (!attr_ids.count(id)) orphans.push_back(id);
    }
    if (!orphans.empty()) {
      std::string list;
      for (std::size_t i = 0; i < orphans.size(); ++i) list += (i ? ", " : "") + orphans[i];
      throw JoinError("event_ids present in only one input: " + list);
    }
    out.columns = features->columns;
  }
  for (const auto& c : attributes.columns) {
    if (std::find(out.columns.begin(), out.columns.end(), c) != out.columns.end()) {
      throw SchemaError("column '" + c + "' appears in both features and attributes");
    }
    out.columns.push_back(c);
  }
  for (std::size_t i = 0; i < attributes.event_ids.size(); ++i) {
    const std::string& id = attributes.event_ids[i];
    std::string label = attributes.labels[i];
    std::vector<double> row;
    if (features) {
      const std::size_t f = feature_row.at(id);
      row = features->rows[f];
      if (label.empty()) label = features->labels[f];
    }
    row.insert(row.end(), attributes.rows[i].begin(), attributes.rows[i].end());
    const auto outcome = parse_outcome(label);
    if (!outcome) throw SchemaError("event " + id + ": unknown outcome '" + label + "'");
    out.event_ids.push_back(id);
    out.observed.push_back(*outcome);
    out.rows.push_back(std::move(row));
  }
  return out;
}

void write_attributes(std::ostream& out, const CovariateTable& table) {
  out << "event_id,outcome";
  for (const auto& c : table.columns) out << ',' << c;
  out << '\n';
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    out << table.event_ids[i] << ',' << to_string(table.observed[i]);
    for (const double v : table.rows[i]) {
      out << ',';
      if (std::isfinite(v)) out << format_number(v);
    }
    out << '\n';
  }
}

}  // namespace volatix::io
