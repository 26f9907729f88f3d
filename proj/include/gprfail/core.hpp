#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace gprfail {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

// Every recoverable numerical problem derives from NumericalError so the CLI
// can map it to a single exit code.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonPhysicalEnergy : NumericalError {
  using NumericalError::NumericalError;
};
struct SingularBlock : NumericalError {
  using NumericalError::NumericalError;
};
struct StallError : NumericalError {
  using NumericalError::NumericalError;
};
struct NewtonDivergence : NumericalError {
  using NumericalError::NumericalError;
};
struct NewtonFailure : NumericalError {
  using NumericalError::NumericalError;
};
struct PredictorDivergence : NumericalError {
  using NumericalError::NumericalError;
};

struct UnsupportedDegree : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::runtime_error {
  int line = 0;
  ConfigError(const std::string& msg, int line_no = 0)
      : std::runtime_error(line_no > 0 ? "line " + std::to_string(line_no) + ": " + msg : msg),
        line(line_no) {}
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double sqr(double x) { return x * x; }

inline double ddot(const Mat3& a, const Mat3& b) { return (a.array() * b.array()).sum(); }

}  // namespace gprfail
