#pragma once

#include <stdexcept>
#include <string>

namespace lipgan {

// Base of every error raised by the library. Callers that only care about
// "something in lipgan failed" catch this; the subclasses exist so tests and
// the CLI can tell the failure kinds apart.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  DimensionMismatch(std::size_t expected, std::size_t got)
      : Error("dimension mismatch: expected " + std::to_string(expected) +
              ", got " + std::to_string(got)) {}
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A closed-form discriminator was evaluated where a density it divides by is
// below the floor.
class OffSupportError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace lipgan
