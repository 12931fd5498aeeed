#pragma once

#include <stdexcept>
#include <string>

namespace nphc {

// Error taxonomy. The CLI maps categories onto exit codes:
// validation -> 2, numeric -> 3, I/O -> 4.

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// --- validation (bad inputs, caught before any numeric work) ---

class ValidationError : public Error {
public:
    using Error::Error;
};

class ParseError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ShapeMismatch : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class DimensionTooSmall : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class InvalidWindow : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class TooLarge : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// --- numeric (well-formed inputs, computation cannot proceed) ---

class NumericError : public Error {
public:
    using Error::Error;
};

class StabilityViolation : public NumericError {
public:
    using NumericError::NumericError;
};

class UnstableModel : public StabilityViolation {
public:
    using StabilityViolation::StabilityViolation;
};

class SingularMatrix : public NumericError {
public:
    using NumericError::NumericError;
};

class NonConvergence : public NumericError {
public:
    using NumericError::NumericError;
};

class DegenerateCumulants : public NumericError {
public:
    using NumericError::NumericError;
};

class NonFinite : public NumericError {
public:
    using NumericError::NumericError;
};

// --- I/O ---

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace nphc
