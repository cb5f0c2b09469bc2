#pragma once

#include <stdexcept>
#include <string>

namespace qdyn {

// Shape/contract violations in tensor math and model assembly.
class ShapeError : public std::invalid_argument {
  public:
    explicit ShapeError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Malformed files, bad config values, mismatched checkpoints.
class DataError : public std::runtime_error {
  public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite losses, integrator instability, diverging rollouts.
class NumericError : public std::runtime_error {
  public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace qdyn
