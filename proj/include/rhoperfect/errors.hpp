#pragma once

#include <stdexcept>

namespace rhoperfect {

// Base class for all library errors. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyItem : public Error {
 public:
  using Error::Error;
};

class TooFewItems : public Error {
 public:
  using Error::Error;
};

class UndefinedConditionalVariance : public Error {
 public:
  using Error::Error;
};

class DegenerateVariance : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class CannotSplit : public Error {
 public:
  using Error::Error;
};

class CannotBalance : public Error {
 public:
  using Error::Error;
};

class SpecError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class EmptyIntersection : public Error {
 public:
  using Error::Error;
};

}  // namespace rhoperfect
