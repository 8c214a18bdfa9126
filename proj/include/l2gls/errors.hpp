#pragma once

#include <stdexcept>
#include <string>

namespace l2gls {

// Malformed input file. Carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line = -1)
      : std::runtime_error(line >= 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Structurally valid file that requests a feature this library does not
// implement, e.g. an explicit edge-weight matrix.
class UnsupportedFormat : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An instance or solution that violates a structural invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Instance on which a requested computation is meaningless, e.g. normalizing
// a set of coincident points.
class DegenerateInstance : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A move applied to a solution that changed since the move was generated.
class StaleMove : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values encountered during a policy update.
class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Exact solver asked for an instance larger than it can handle.
class SizeLimitExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace l2gls
