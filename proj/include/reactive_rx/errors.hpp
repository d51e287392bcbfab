#pragma once

#include <stdexcept>
#include <string>

namespace rrx {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GeometryError : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct NonFiniteError : Error { using Error::Error; };
struct DegenerateRootsError : Error { using Error::Error; };
struct ImaginaryLeakError : Error { using Error::Error; };
struct RangeError : Error { using Error::Error; };
struct BranchError : Error { using Error::Error; };
struct QuadratureError : Error { using Error::Error; };
struct ContourError : Error { using Error::Error; };
struct ConvergenceError : Error { using Error::Error; };
// Raised when a numerical self-check (e.g. contour-node doubling) disagrees
// beyond tolerance; "warning" in name only — it is a hard failure here.
using ConvergenceWarning = ConvergenceError;
struct GridMismatchError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
struct InvariantBreachError : Error { using Error::Error; };

} // namespace rrx
