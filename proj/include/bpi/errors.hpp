#pragma once

#include <stdexcept>
#include <string>

namespace bpi {

// Raised when an adaptive quadrature cannot meet its tolerance.
class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A forest whose planar order or branch times are inconsistent.
class MalformedForest : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GridMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DerivativeUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptySample : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Bad or inconsistent experiment configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MissingArtifact : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bpi
