#pragma once

#include <stdexcept>
#include <string>

namespace manta {

// Bad or unreadable external input (files, CLI data). CLI maps this to exit code 2.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// A parse failure that knows where it happened.
class FormatError : public DataError {
 public:
  FormatError(const std::string& file, int line, const std::string& msg)
      : DataError(file + ":" + std::to_string(line) + ": " + msg),
        file_(file),
        line_(line) {}

  const std::string& file() const { return file_; }
  int line() const { return line_; }

 private:
  std::string file_;
  int line_;
};

// Broken internal invariant. CLI maps this to exit code 3.
class InternalError : public std::logic_error {
 public:
  explicit InternalError(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace manta
