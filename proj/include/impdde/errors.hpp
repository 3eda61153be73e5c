#pragma once

#include <stdexcept>
#include <string>

namespace impdde {

/// Argument outside the domain of an operation (time out of range, mismatched
/// horizons, negative growth samples, ...).
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite value produced during evaluation or integration. Carries the
/// time at which the offending evaluation happened when one is known.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what), time_(0), has_time_(false) {}
  NumericError(const std::string& what, double t) : std::runtime_error(what), time_(t), has_time_(true) {}

  bool has_time() const noexcept { return has_time_; }
  double time() const noexcept { return time_; }

 private:
  double time_;
  bool has_time_;
};

/// Lexical, syntactic, or binding error in the expression language.
/// `pos` is the 0-based byte offset into the source text; user-facing
/// messages render it as a 1-based column.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t pos)
      : std::runtime_error(what + " (column " + std::to_string(pos + 1) + ")"), pos_(pos) {}

  std::size_t pos() const noexcept { return pos_; }

 private:
  std::size_t pos_;
};

/// Configuration file error with the JSON path of the offending field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& path, const std::string& what)
      : std::runtime_error(path.empty() ? what : path + ": " + what), path_(path) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace impdde
