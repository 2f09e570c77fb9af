#pragma once

#include <stdexcept>
#include <string>

namespace tcsim {

// Base for recoverable configuration / input problems (CLI exit code 2).
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Base for numerical failures during a computation (CLI exit code 3).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : ValidationError {
    ParseError(const std::string& file, int line, const std::string& what)
        : ValidationError(file + ":" + std::to_string(line) + ": " + what) {}
};

struct OutOfArcRange : NumericalError { using NumericalError::NumericalError; };
struct DimensionCap : ValidationError { using ValidationError::ValidationError; };
struct AmbiguousLabeling : NumericalError { using NumericalError::NumericalError; };
struct NoCrossingInWindow : NumericalError { using NumericalError::NumericalError; };
struct OutOfRange : ValidationError { using ValidationError::ValidationError; };
struct LabelMismatch : ValidationError { using ValidationError::ValidationError; };
struct SingularMatrix : NumericalError { using NumericalError::NumericalError; };
struct Unreachable : NumericalError { using NumericalError::NumericalError; };
struct NonConvergence : NumericalError { using NumericalError::NumericalError; };
struct NoBracket : NumericalError { using NumericalError::NumericalError; };
struct UnstableInverse : NumericalError { using NumericalError::NumericalError; };
struct FitFailure : NumericalError { using NumericalError::NumericalError; };
struct NonConvergedStep : NumericalError { using NumericalError::NumericalError; };

} // namespace tcsim
