#pragma once

#include <stdexcept>
#include <string>

namespace nodal {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid domain parameters or a mesh that cannot resolve the domain.
class MeshError : public Error {
public:
    using Error::Error;
};

/// Operands live on different meshes, or a mesh lacks a requested symmetry.
class MeshMismatch : public Error {
public:
    using Error::Error;
};

/// An iterative solver ran out of budget or broke down.
class SolverError : public Error {
public:
    SolverError(const std::string& what, double residual)
        : Error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// A linearization was requested for a nonlinearity that is not C^1.
class NotC1Error : public Error {
public:
    using Error::Error;
};

/// A precondition of an operation does not hold.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Malformed or unknown configuration entries.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace nodal
