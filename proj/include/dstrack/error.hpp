#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dstrack {

// Input or validation failure. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

// Structured parse failure with a 1-based source location. line == 0 means
// the location is unknown (e.g. a whole-file problem).
class ParseError : public Error {
 public:
  ParseError(std::string source, std::size_t line, std::size_t column, std::string reason)
      : Error(format(source, line, column, reason)),
        source_(std::move(source)),
        line_(line),
        column_(column),
        reason_(std::move(reason)) {}

  const std::string& source() const noexcept { return source_; }
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  static std::string format(const std::string& source, std::size_t line, std::size_t column,
                            const std::string& reason) {
    std::string out = source.empty() ? std::string("<input>") : source;
    if (line > 0) {
      out += ":" + std::to_string(line);
      if (column > 0) out += ":" + std::to_string(column);
    }
    return out + ": " + reason;
  }

  std::string source_;
  std::size_t line_;
  std::size_t column_;
  std::string reason_;
};

}  // namespace dstrack
