#pragma once

#include <stdexcept>
#include <string>

namespace evfuse {

enum class ErrorKind {
  kConfig,
  kParse,
  kOrdering,
  kOutOfBounds,
  kRange,
  kDistortion,
  kDegenerateGeometry,
  kAlignment,
  kDomain,
  kIo,
};

const char* ErrorKindName(ErrorKind kind);

// All library failures are reported through this type. The kind drives the
// CLI exit code (config = 1, data = 2, numerical/geometry = 3).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

// Parse-type errors that point at a line of a text input.
class LineError : public Error {
 public:
  LineError(ErrorKind kind, std::size_t line, const std::string& what)
      : Error(kind, "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

inline const char* ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kOrdering: return "ordering";
    case ErrorKind::kOutOfBounds: return "out_of_bounds";
    case ErrorKind::kRange: return "range";
    case ErrorKind::kDistortion: return "distortion";
    case ErrorKind::kDegenerateGeometry: return "degenerate_geometry";
    case ErrorKind::kAlignment: return "alignment";
    case ErrorKind::kDomain: return "domain";
    case ErrorKind::kIo: return "io";
  }
  return "unknown";
}

}  // namespace evfuse
