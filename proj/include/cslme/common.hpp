//
// cslme - Copyright 2026 The cslme Authors.
// SPDX-License-Identifier: Apache-2.0
//

#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace cslme {

using Index = Eigen::Index;

template <class Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <class Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the domain of a function (rho <= 0, k1 == 0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Inconsistent matrix/vector shapes or label sets.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A linear system that must be solved is (numerically) singular.
class SingularError : public Error {
 public:
  using Error::Error;
};

/// Cholesky failed even after the diagonal jitter retry.
class NotPositiveDefiniteError : public Error {
 public:
  using Error::Error;
};

/// An iterative fit did not reach its convergence criterion.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// A density product underflowed to (sub)normal range.
class UnderflowError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file; message carries the row/column location.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or command-line value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace cslme
