#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace issuelab {

/// Base for every error the library raises deliberately.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A malformed archive line.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A record points at an id that does not exist.
class IntegrityError : public Error {
 public:
  IntegrityError(std::string from_id, std::string to_id, const std::string& what)
      : Error(what + ": '" + from_id + "' references unknown '" + to_id + "'"),
        from_(std::move(from_id)),
        to_(std::move(to_id)) {}
  const std::string& from_id() const noexcept { return from_; }
  const std::string& to_id() const noexcept { return to_; }

 private:
  std::string from_;
  std::string to_;
};

/// Not enough positive-duration gaps to take a median.
class InsufficientData : public Error {
 public:
  using Error::Error;
};

/// Pearson correlation with a zero-variance input.
class UndefinedCorrelation : public Error {
 public:
  using Error::Error;
};

/// A filter left fewer repositories than an analysis needs.
class EmptySelection : public Error {
 public:
  using Error::Error;
};

}  // namespace issuelab
