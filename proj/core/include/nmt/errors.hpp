#pragma once

#include <stdexcept>
#include <string>

namespace nmt {

// Input file could not be opened or read.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed corpus or dataset content. Carries the 1-based row (or line)
// number where parsing failed.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, long long row)
      : std::runtime_error(what + " (row " + std::to_string(row) + ")"), row_(row) {}

  long long row() const { return row_; }

 private:
  long long row_;
};

// Checkpoint file rejected: bad magic, unsupported version, truncated data,
// or shapes inconsistent with the declared hyperparameters.
class CheckpointError : public std::runtime_error {
 public:
  explicit CheckpointError(const std::string& what) : std::runtime_error(what) {}
};

// Training produced a non-finite loss. Carries the iteration at which the
// value first became non-finite.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, long long iteration)
      : std::runtime_error(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}

  long long iteration() const { return iteration_; }

 private:
  long long iteration_;
};

}  // namespace nmt
