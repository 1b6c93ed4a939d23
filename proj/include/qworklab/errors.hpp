// errors.hpp — exception types shared by all qworklab modules

#pragma once

#include <stdexcept>
#include <string>

namespace qworklab {

/// Base for every error raised by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid input: a type invariant or a precondition does not hold.
struct ValidationError : Error {
    using Error::Error;
};

/// Operand dimensions disagree, or the exact engine's dimension cap is exceeded.
struct DimensionError : Error {
    using Error::Error;
};

/// A complex logarithm would pass through zero along the continuation path.
struct BranchError : Error {
    BranchError(const std::string& what, double u_at) : Error(what), u(u_at) {}
    double u;
};

/// Atom energies are not commensurate with the declared lattice, or the
/// inversion grid aliases.
struct CommensurabilityError : Error {
    using Error::Error;
};

/// An internal cross-check failed (route mismatch, inconsistent signals).
struct InvariantError : Error {
    using Error::Error;
};

} // namespace qworklab
