#pragma once

#include <stdexcept>
#include <string>

namespace ura {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A structural or statistical constraint on a spec object is violated.
class InvalidSpec : public Error {
 public:
  using Error::Error;
};

/// A scalar argument is outside its admissible range.
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// Non-finite values, loss of positive definiteness, singular updates.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

/// An allocation would exceed the configured memory budget.
class ResourceError : public Error {
 public:
  using Error::Error;
};

/// Tree decoding produced more surviving paths than allowed.
class DecoderOverflow : public Error {
 public:
  DecoderOverflow(int stage, std::size_t paths)
      : Error("tree decoder overflow at stage " + std::to_string(stage + 1) + ": " +
              std::to_string(paths) + " surviving paths"),
        stage_(stage),
        paths_(paths) {}

  int stage() const noexcept { return stage_; }
  std::size_t paths() const noexcept { return paths_; }

 private:
  int stage_;
  std::size_t paths_;
};

/// Malformed configuration text. `line` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(int line, std::string field, const std::string& what)
      : Error(format(line, field, what)), line_(line), field_(std::move(field)) {}

  int line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  static std::string format(int line, const std::string& field, const std::string& what) {
    std::string msg = "config";
    if (line > 0) msg += " line " + std::to_string(line);
    if (!field.empty()) msg += " [" + field + "]";
    return msg + ": " + what;
  }

  int line_;
  std::string field_;
};

/// Caller asked for something that does not fit the data it supplied.
class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace ura
