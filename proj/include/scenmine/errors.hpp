#pragma once

#include <stdexcept>
#include <string>

namespace scenmine {

// Base of every error raised by the engine.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A value violates an operation's precondition or a type invariant.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Not enough samples to compute a derived quantity (e.g. velocity of a
// single-state track).
class InsufficientData : public Error {
 public:
  using Error::Error;
};

// Cosine similarity with a zero-norm operand.
class UndefinedSimilarity : public Error {
 public:
  using Error::Error;
};

// On-disk data is malformed: bad magic, version mismatch, checksum failure,
// truncation, or an unparsable record.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace scenmine
