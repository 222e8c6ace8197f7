#pragma once

#include <stdexcept>
#include <string>

namespace mgcn {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid input data: malformed files, invalid meshes, dimension mismatches.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A numerical procedure failed (non-convergence, frame tolerance violated, ...).
class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace mgcn
