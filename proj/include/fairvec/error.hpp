#pragma once

#include <stdexcept>
#include <string>

namespace fairvec {

// Base of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input: unreadable files, malformed formats, invalid configs.
class InputError : public Error {
 public:
  using Error::Error;
};

// Malformed embedding or lexicon file content.
class ParseError : public InputError {
 public:
  using InputError::InputError;
};

// A computation could not proceed (zero variance, empty null space, ...).
class ComputationError : public Error {
 public:
  using Error::Error;
};

class DegenerateError : public ComputationError {
 public:
  using ComputationError::ComputationError;
};

}  // namespace fairvec
