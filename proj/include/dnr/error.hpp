#pragma once

#include <stdexcept>
#include <string>

namespace dnr {

// Malformed inputs: corpora, XML, checkpoints, mismatched vocabularies.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Violated preconditions on call arguments (dimensions, ranges, sizes).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Non-finite loss or parameter encountered during computation.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dnr
