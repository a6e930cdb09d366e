#pragma once

#include <stdexcept>
#include <string>

namespace exsim {

/// Base class of every failure the library raises.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Broken precondition (dimension mismatch, bad argument range).
class ContractError : public Error {
public:
    using Error::Error;
};

/// Non-finite value encountered where a finite one is required.
class NonFiniteError : public Error {
public:
    using Error::Error;
};

/// Structurally or numerically singular matrix during factorization.
class SingularMatrixError : public Error {
public:
    SingularMatrixError(const std::string& what, int pivot_index)
        : Error(what), pivot_index_(pivot_index) {}
    /// Elimination step at which the pivot search failed.
    int pivot_index() const noexcept { return pivot_index_; }

private:
    int pivot_index_;
};

/// Krylov start vector has zero norm.
class ZeroStartVectorError : public Error {
public:
    using Error::Error;
};

/// Krylov dimension cap reached before the residual test passed.
class NoConvergenceError : public Error {
public:
    NoConvergenceError(const std::string& what, double last_residual)
        : Error(what), last_residual_(last_residual) {}
    double last_residual() const noexcept { return last_residual_; }

private:
    double last_residual_;
};

/// Reduced Hessenberg matrix too ill-conditioned to invert.
class SingularReducedMatrixError : public Error {
public:
    using Error::Error;
};

/// DC operating point not found even with gmin stepping.
class NoDcConvergenceError : public Error {
public:
    using Error::Error;
};

/// Transient step size driven below its lower bound.
class StepFailureError : public Error {
public:
    using Error::Error;
};

/// Netlist lexical or syntax error.
class ParseError : public Error {
public:
    ParseError(const std::string& what, int line, std::string token = {})
        : Error(what), line_(line), token_(std::move(token)) {}
    int line() const noexcept { return line_; }
    const std::string& token() const noexcept { return token_; }

private:
    int line_;
    std::string token_;
};

}  // namespace exsim
