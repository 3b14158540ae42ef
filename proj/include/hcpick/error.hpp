#pragma once

#include <stdexcept>
#include <string>

namespace hcpick {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GenerationError : public Error {
 public:
  using Error::Error;
};
class FabricationError : public Error {
 public:
  using Error::Error;
};
class DegeneracyError : public Error {
 public:
  using Error::Error;
};
class SymmetryUndefinedError : public Error {
 public:
  using Error::Error;
};
class UndefinedAngleError : public Error {
 public:
  using Error::Error;
};
class SingularSystemError : public Error {
 public:
  using Error::Error;
};
class NormalizationError : public Error {
 public:
  using Error::Error;
};
class GaugeError : public Error {
 public:
  using Error::Error;
};
class ShapeError : public Error {
 public:
  using Error::Error;
};
class MetricError : public Error {
 public:
  using Error::Error;
};
class TrainingDivergenceError : public Error {
 public:
  using Error::Error;
};
class NoModelError : public Error {
 public:
  using Error::Error;
};
class ParseError : public Error {
 public:
  using Error::Error;
};
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace hcpick
