#pragma once

#include <stdexcept>
#include <string>

namespace chunkrl {

// Input arrays whose dimensions do not match what an operation expects.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// An API called out of order (stepping a finished episode, backward without a
// forward cache, finalizing a running episode, ...).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace chunkrl
