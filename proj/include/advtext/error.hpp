#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace advtext {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid experiment configuration or unknown format selector.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what, std::string field = {})
      : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Malformed or unusable input data. `line` is 1-based, 0 when not tied to a file line.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(what) {}
  DataError(const std::string& what, std::size_t line, std::string field)
      : Error("line " + std::to_string(line) + ", field '" + field + "': " + what),
        line_(line),
        field_(std::move(field)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_ = 0;
  std::string field_;
};

/// Failure talking to a remote victim, generator or scorer.
class RemoteError : public Error {
 public:
  enum class Kind { Timeout, Network, Status, Protocol };

  RemoteError(Kind kind, const std::string& what, int status = 0)
      : Error(what), kind_(kind), status_(status) {}

  Kind kind() const noexcept { return kind_; }
  int status() const noexcept { return status_; }
  bool is_transport() const noexcept { return kind_ == Kind::Timeout || kind_ == Kind::Network; }

 private:
  Kind kind_;
  int status_;
};

/// The generator found nothing to perturb in the input.
class NoApplicableRules : public Error {
 public:
  NoApplicableRules() : Error("no applicable substitution rule") {}
};

}  // namespace advtext
