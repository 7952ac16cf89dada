#pragma once

#include <stdexcept>
#include <string>

namespace apperf {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed metric source. Line and column are 1-based.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, int line, int column)
      : Error(std::to_string(line) + ":" + std::to_string(column) + ": " + msg),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

// A metric that cannot be compiled or evaluated. k and l are -1 when the
// failure is not tied to a grid cell.
class MetricError : public Error {
 public:
  explicit MetricError(const std::string& msg, int k = -1, int l = -1)
      : Error(msg), k_(k), l_(l) {}
  int k() const { return k_; }
  int l() const { return l_; }

 private:
  int k_;
  int l_;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace apperf
