#pragma once

#include <stdexcept>
#include <string>

namespace warpsmooth {

// Base of every failure raised by the library.  Subtypes name the violated
// contract; the message carries the offending values.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// No monotone warping exists for the requested feature windows.
struct InfeasibleSpec : Error { using Error::Error; };
// Derivative order beyond the guaranteed smoothness class.
struct OrderTooHigh : Error { using Error::Error; };
// Sampled infimum of the commutator lower bound is <= 0.
struct NonpositiveBound : Error { using Error::Error; };
struct GridTooCoarse : Error { using Error::Error; };
// I + P has an eigenvalue <= 0; Sobolev calculus undefined.
struct NegativeOperator : Error { using Error::Error; };
struct NoEigenpair : Error { using Error::Error; };
struct SolveFailure : Error { using Error::Error; };
struct NotConverged : Error { using Error::Error; };
// Second small parameter fails h_tilde > h.
struct ScaleViolation : Error { using Error::Error; };
struct NyquistViolation : Error { using Error::Error; };
struct SignViolation : Error { using Error::Error; };
// Regression R^2 below the acceptance threshold.
struct PoorFit : Error { using Error::Error; };
// Configuration failed the fail-fast validation pass (CLI exit 2).
struct ConfigError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

}  // namespace warpsmooth
