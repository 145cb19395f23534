#pragma once

#include <stdexcept>
#include <string>

namespace lle {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Map text that does not conform to the grammar. row/col are 0-based token
// coordinates into the map text.
struct ParseError : Error {
  int row;
  int col;
  ParseError(const std::string& msg, int row_, int col_)
      : Error(msg + " (row " + std::to_string(row_) + ", col " + std::to_string(col_) + ")"),
        row(row_),
        col(col_) {}
};

// Structurally well-formed map that violates a semantic invariant.
struct ValidationError : Error {
  using Error::Error;
};

// An operation was called outside its contract (e.g. stepping a finished
// world, supplying an unavailable action).
struct ContractViolation : Error {
  using Error::Error;
};

// Map generation gave up after the configured number of attempts.
struct GenerationExhausted : Error {
  using Error::Error;
};

// The joint state space exceeds the solvability search bound.
struct StateSpaceTooLarge : Error {
  using Error::Error;
};

// A replay buffer was sampled for more items than it holds.
struct InsufficientData : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace lle
