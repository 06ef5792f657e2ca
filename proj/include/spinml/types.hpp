#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace spinml {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A Hamiltonian could not be built from the requested parameters.
class InvalidModel : public Error {
 public:
  using Error::Error;
};

/// A tree topology request or document is structurally invalid.
class TopologyError : public Error {
 public:
  using Error::Error;
};

/// A structured-text document could not be parsed.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Two objects that must agree (tree vs. Hamiltonian, cache vs. state) do not.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

/// A request exceeds a memory guard (dense vectors, exact diagonalization).
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An imaginary-time step produced non-finite or singular data.
class StepFailure : public Error {
 public:
  using Error::Error;
};

/// Krylov eigensolver exhausted its restarts.
class KrylovError : public Error {
 public:
  KrylovError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Run configuration is missing, malformed, or references absent files.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace spinml
