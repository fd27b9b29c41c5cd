// Copyright 2026 The cpdil Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CPDIL_TYPES_HPP
#define CPDIL_TYPES_HPP

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace cpdil {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;

// Tolerance used by every predicate unless the caller overrides it.
inline constexpr double kDefaultTol = 1e-9;
// Threshold below which a stochastic-matrix entry counts as zero.
inline constexpr double kDefaultZeroTol = 1e-12;
// Largest fiber (or big-space) dimension built without an explicit override.
inline constexpr std::size_t kDefaultDimCap = 4096;

//============================================================================
// Errors
//============================================================================

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: wrong shapes, non-finite entries, unreadable data.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// A caller-side contract was not met (e.g. certifying a non-commuting pair).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class NotCompletelyPositive : public Error {
 public:
  NotCompletelyPositive(const std::string& what, double eigenvalue)
      : Error(what), eigenvalue_(eigenvalue) {}
  double eigenvalue() const { return eigenvalue_; }

 private:
  double eigenvalue_;
};

class NotSameChannel : public Error {
 public:
  NotSameChannel(const std::string& what, double mismatch)
      : Error(what), mismatch_(mismatch) {}
  double mismatch() const { return mismatch_; }

 private:
  double mismatch_;
};

class CertificateFailure : public Error {
 public:
  CertificateFailure(const std::string& what, double unitarity,
                     double intertwining)
      : Error(what), unitarity_(unitarity), intertwining_(intertwining) {}
  double unitarity_residual() const { return unitarity_; }
  double intertwining_residual() const { return intertwining_; }

 private:
  double unitarity_;
  double intertwining_;
};

// Requested an operator outside the region where the finite realization is
// exact.
class OutOfHorizon : public Error {
 public:
  using Error::Error;
};

class CapExceeded : public Error {
 public:
  using Error::Error;
};

// Internal verification failed while building a derived object.
class ConstructionFailure : public Error {
 public:
  using Error::Error;
};

//============================================================================
// Small helpers
//============================================================================

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline std::string shape_str(Eigen::Index rows, Eigen::Index cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

}  // namespace cpdil

#endif  // CPDIL_TYPES_HPP
