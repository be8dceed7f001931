#pragma once

#include <stdexcept>
#include <string>

namespace recast {

// Base for every failure the library raises on purpose. Callers that want to
// keep a batch alive catch this and record the message.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Unknown (type, variant) pair or a template whose arity disagrees.
class RegistryError : public Error {
 public:
  using Error::Error;
};

// Schema violation while decoding a serialized record. `field` names the
// offending key; `line` is 1-based when the record came from a JSONL file.
class ParseError : public Error {
 public:
  ParseError(std::string field, const std::string& message, long line = 0)
      : Error(format(field, message, line)), field_(std::move(field)), line_(line) {}

  const std::string& field() const { return field_; }
  long line() const { return line_; }

 private:
  static std::string format(const std::string& field, const std::string& message, long line) {
    std::string out;
    if (line > 0) out += "line " + std::to_string(line) + ": ";
    out += "field '" + field + "': " + message;
    return out;
  }

  std::string field_;
  long line_;
};

class RankingParseError : public Error {
 public:
  using Error::Error;
};

class GenerationParseError : public Error {
 public:
  using Error::Error;
};

// The judge kept answering outside the {analysis, answer: Yes|No} contract.
class JudgeProtocolError : public Error {
 public:
  using Error::Error;
};

// Transport-level failure talking to a provider.
class GatewayError : public Error {
 public:
  enum class Kind { auth, timeout, http_status, malformed_payload, transport };

  GatewayError(Kind kind, const std::string& message, int status = 0)
      : Error(message), kind_(kind), status_(status) {}

  Kind kind() const { return kind_; }
  int status() const { return status_; }

 private:
  Kind kind_;
  int status_;
};

// Operator-facing configuration problems; the CLI maps these to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace recast
