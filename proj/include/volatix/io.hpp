#pragma once

// CSV schemas shared by the CLI and the generators.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "volatix/kinematics.hpp"
#include "volatix/model.hpp"

namespace volatix::io {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line of each row

  /// Throws SchemaError naming the missing column.
  std::size_t require_column(const std::string& name, const std::string& source) const;
  std::optional<std::size_t> find_column(const std::string& name) const;
};

/// Minimal RFC 4180 reader: commas, double-quoted fields, CRLF tolerated.
CsvTable parse_csv(std::istream& in, const std::string& source);
CsvTable read_csv(const std::string& path);

/// %.17g formatting so values survive a write/read cycle exactly.
std::string format_number(double v);
/// Strict full-string parse; throws SchemaError with the location on failure.
double parse_number(const std::string& cell, const std::string& source, std::size_t line,
                    const std::string& column);

struct Reject {
  std::string event_id;
  std::string reason;
};

struct TraceInput {
  std::vector<EventTrace> traces;
  std::vector<Reject> rejects;  // events dropped at ingestion
  std::vector<std::string> warnings;
};

/// Long-format traces (event_id, event_type, t_sec, speed_kph,
/// accel_long_mps2, accel_lat_mps2) plus the event sidecar (event_id,
/// reaction_t_sec, impact_t_sec). Events with non-uniform sampling are
/// rejected, never resampled.
TraceInput read_traces(const CsvTable& traces, const CsvTable* events);

void write_traces(std::ostream& out, const std::vector<EventTrace>& traces);
void write_events(std::ostream& out, const std::vector<EventTrace>& traces);

struct FeatureRow {
  std::string event_id;
  EventType event_type = EventType::Baseline;
  VolatilityVector features;
};

/// event_id, event_type and the ten volatility fields; missing components
/// are written as empty cells.
void write_features(std::ostream& out, const std::vector<FeatureRow>& rows);
void write_rejects(std::ostream& out, const std::vector<Reject>& rejects);

/// A keyed table of numeric covariates. Empty cells become NaN.
struct KeyedTable {
  std::vector<std::string> columns;
  std::vector<std::string> event_ids;
  std::vector<std::string> labels;  // outcome / event type per row, may be empty
  std::vector<std::vector<double>> rows;
};

/// Reads a feature CSV (label column: event_type).
KeyedTable read_features(const CsvTable& csv);
/// Reads an attribute CSV: event_id, optional outcome, numeric covariates.
KeyedTable read_attributes(const CsvTable& csv);

/// Joins on event_id (attribute order wins). The outcome comes from the
/// attribute table's outcome column, else the feature event_type. Throws
/// JoinError listing orphan ids on either side.
CovariateTable join(const KeyedTable* features, const KeyedTable& attributes);

/// Writes event_id, outcome and every covariate column.
void write_attributes(std::ostream& out, const CovariateTable& table);

}  // namespace volatix::io
