#pragma once

#include <stdexcept>
#include <string>

namespace volatix {

// Every failure the library reports derives from Error so callers (the CLI in
// particular) can map it onto an exit code without string matching.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateSeries : public Error {
 public:
  using Error::Error;
};

class InsufficientData : public Error {
 public:
  explicit InsufficientData(std::string event_id, const std::string& what)
      : Error(what), event_id_(std::move(event_id)) {}
  const std::string& event_id() const noexcept { return event_id_; }

 private:
  std::string event_id_;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

class LayoutError : public Error {
 public:
  using Error::Error;
};

class CollinearCovariate : public Error {
 public:
  using Error::Error;
};

class NotFitted : public Error {
 public:
  using Error::Error;
};

class InvalidScenario : public Error {
 public:
  using Error::Error;
};

class InvalidTarget : public Error {
 public:
  using Error::Error;
};

/// Malformed input file: wrong header, unparsable cell, non-uniform sampling.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Inputs that parse but do not line up (orphan event ids and the like).
class JoinError : public Error {
 public:
  using Error::Error;
};

}  // namespace volatix
