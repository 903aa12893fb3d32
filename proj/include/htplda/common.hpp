// include/htplda/common.hpp

// Copyright 2026  HT-PLDA backend contributors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef HTPLDA_COMMON_HPP_
#define HTPLDA_COMMON_HPP_

#include <Eigen/Dense>

#include <limits>
#include <stdexcept>
#include <string>

namespace htplda {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Distinguished value for the degrees-of-freedom parameter: selects the
// Gaussian (G-PLDA) branches everywhere, not a large-nu surrogate.
constexpr double kNuInfinity = std::numeric_limits<double>::infinity();

// Default relative tolerance for structural identities (GF = 0 and friends).
constexpr double kStructuralTol = 1e-8;

// Bad flags or arguments; maps to exit code 1 in the CLI.
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string &msg) : std::runtime_error(msg) {}
};

// Malformed or inconsistent input data; maps to exit code 2.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string &msg) : std::runtime_error(msg) {}
};

// Numerical failure (singular matrix, non-finite result); exit code 3.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string &msg) : std::runtime_error(msg) {}
};

// Largest absolute entry of a matrix; the scale used by relative tolerances.
inline double MaxAbs(const Matrix &m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

}  // namespace htplda

#endif  // HTPLDA_COMMON_HPP_
