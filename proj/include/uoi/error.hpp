#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace uoi {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition violated by the caller (bad dimensions, out-of-range parameters).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A path could not be opened, read or written.
class IoError : public Error {
 public:
  IoError(const std::string& path, const std::string& what)
      : Error(path + ": " + what), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// File contents do not follow the expected layout.
class FormatError : public Error {
 public:
  using Error::Error;
};

class HeaderError : public FormatError {
 public:
  using FormatError::FormatError;
};

class PayloadSizeError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Delimited text that does not parse; `line()` is 1-based.
class ParseError : public FormatError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : FormatError("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

class TruncatedError : public FormatError {
 public:
  using FormatError::FormatError;
};

}  // namespace uoi
