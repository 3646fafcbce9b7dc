#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tvlab {

// Base of every error raised by the library. Callers that only care about
// "something in tvlab failed" can catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// normalize() was asked to renormalize a vector with no positive mass.
class ZeroMass : public Error {
 public:
  using Error::Error;
};

// parent acceptance update at p == 1 with an exhausted residual: 0/0.
class Indeterminate : public Error {
 public:
  using Error::Error;
};

class InvalidSpec : public Error {
 public:
  using Error::Error;
};

// Enumeration guard tripped (oracle, exact sequence law, labelings).
class TooLarge : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " (at position " + std::to_string(position) + ")"), position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class SupportExhausted : public Error {
 public:
  using Error::Error;
};

class EmptyTree : public Error {
 public:
  using Error::Error;
};

// A rejection happened but the residual target has no mass left.
class DegenerateResidual : public Error {
 public:
  using Error::Error;
};

class ZeroDraftProbability : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace tvlab
