#pragma once

#include <stdexcept>
#include <string>

namespace qopt {

// Root of the library's error hierarchy. Everything thrown on purpose
// derives from this, so callers can catch qopt::Error and map it to an
// exit code without enumerating every failure mode.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user-supplied value (dimension mismatch, negative width, ...).
class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

// Degenerate parameter domain: lower/upper mismatch or empty sides.
class InvalidDomainError : public InvalidArgumentError {
 public:
  using InvalidArgumentError::InvalidArgumentError;
};

// Configuration file problem; message names the offending field.
class ConfigError : public InvalidArgumentError {
 public:
  using InvalidArgumentError::InvalidArgumentError;
};

// Subset enumeration would exceed the candidate cap.
class TooManyCandidatesError : public InvalidArgumentError {
 public:
  using InvalidArgumentError::InvalidArgumentError;
};

// Model evaluation or linear algebra failed (solver breakdown, NaNs, ...).
class NumericalFailureError : public Error {
 public:
  using Error::Error;
};

// A Jacobian is rank deficient where full row rank is required.
class RankDeficientJacobianError : public NumericalFailureError {
 public:
  using NumericalFailureError::NumericalFailureError;
};

// Neighborhood regression for a Jacobian estimate was not solvable.
class IllConditionedNeighborhoodError : public NumericalFailureError {
 public:
  using NumericalFailureError::NumericalFailureError;
};

// Every Jacobian site was skipped, so an average would be meaningless.
class NoValidSitesError : public NumericalFailureError {
 public:
  using NumericalFailureError::NumericalFailureError;
};

// More sites were skipped than the skip policy tolerates.
class TooManySkippedSitesError : public NumericalFailureError {
 public:
  using NumericalFailureError::NumericalFailureError;
};

// No observation cell captured any sample: the solution would be all zeros.
class EmptySupportError : public Error {
 public:
  using Error::Error;
};

}  // namespace qopt
