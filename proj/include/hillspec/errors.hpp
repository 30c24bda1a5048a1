#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hillspec {

/// Base class for every error thrown by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainError : Error {
  using Error::Error;
};

// --- expression language ---

struct ParseError : Error {
  ParseError(std::size_t offset_, std::string expected_, const std::string& what_)
      : Error(what_), offset(offset_), expected(std::move(expected_)) {}
  std::size_t offset;
  std::string expected;
};

struct UnknownIdentifier : ParseError {
  UnknownIdentifier(std::size_t offset_, std::string name_, const std::string& what_)
      : ParseError(offset_, "x, i, pi, e or a function name", what_), name(std::move(name_)) {}
  std::string name;
};

struct EvalError : Error {
  using Error::Error;
};

// --- integrator ---

struct InvalidTolerance : Error {
  using Error::Error;
};

struct StepSizeUnderflow : Error {
  using Error::Error;
};

struct InconsistentDerivative : Error {
  using Error::Error;
};

// --- spectrum machinery ---

struct OrderUndetermined : Error {
  using Error::Error;
};

/// The two spectrum-membership criteria (unit-modulus multiplier vs real
/// discriminant in [-1,1]) disagreed beyond their matched tolerances.
struct CriteriaMismatch : Error {
  using Error::Error;
};

struct SeedNotOnSpectrum : Error {
  using Error::Error;
};

struct CorrectorDiverged : Error {
  using Error::Error;
};

struct ArcCountMismatch : Error {
  ArcCountMismatch(int predicted_, int measured_, const std::string& what_)
      : Error(what_), predicted(predicted_), measured(measured_) {}
  int predicted;
  int measured;
};

struct NotPTSymmetric : Error {
  using Error::Error;
};

// --- CLI / file surface ---

struct SpecError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace hillspec
