#pragma once

#include <stdexcept>
#include <string>

namespace noisyst {

// Bad arguments or malformed input data (empty corpora, bad toy inputs, ...).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Inconsistent model configuration, shape mismatches, bad config files.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values produced during training.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A self-training stage failed; the message carries the iteration index.
class StageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace noisyst
