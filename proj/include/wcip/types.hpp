#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace wcip {

using Index = Eigen::Index;
using Vec3 = Eigen::Vector3d;
using NodalField = Eigen::VectorXd;

// Node-major vector field: entry 3*i + a is component a at node i.
using VectorField = Eigen::VectorXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class MeshError : public Error {
 public:
  using Error::Error;
};

class InterpolationError : public Error {
 public:
  using Error::Error;
};

class ContractError : public Error {
 public:
  using Error::Error;
};

class MemoryCapError : public Error {
 public:
  MemoryCapError(std::size_t required, std::size_t cap)
      : Error("run needs " + std::to_string(required) + " bytes of field history, cap is " +
              std::to_string(cap) + " bytes"),
        required_bytes(required) {}
  std::size_t required_bytes;
};

class InstabilityError : public Error {
 public:
  explicit InstabilityError(Index step_index)
      : Error("non-finite field values detected at time step " + std::to_string(step_index)),
        step(step_index) {}
  Index step;
};

class FileFormatError : public Error {
 public:
  using Error::Error;
};

class ChecksumError : public FileFormatError {
 public:
  using FileFormatError::FileFormatError;
};

class InverseCrimeError : public Error {
 public:
  using Error::Error;
};

}  // namespace wcip
