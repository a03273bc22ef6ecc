#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fairnet {

// Process exit codes used by the command-line tool. Every library error maps
// onto exactly one of them.
enum class ExitCode : int {
    ok = 0,
    io = 1,
    usage = 2,
    numeric_fault = 3,
    degenerate_stratum = 4,
};

class Error : public std::runtime_error {
public:
    Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ExitCode code() const noexcept { return code_; }

private:
    ExitCode code_;
};

// Malformed arguments or inputs that violate a documented precondition.
class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& what) : Error(ExitCode::usage, what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ExitCode::io, what) {}
};

// NaN/Inf produced while evaluating a graph node, or a diverged training run.
class NumericFault : public Error {
public:
    NumericFault(std::size_t node, const std::string& what)
        : Error(ExitCode::numeric_fault, what), node_(node) {}
    std::size_t node() const noexcept { return node_; }

private:
    std::size_t node_;
};

// A subpopulation/class cell that is empty or too small for the requested
// computation (single-class group, empty group, unsplittable cell).
class DegenerateStratum : public Error {
public:
    explicit DegenerateStratum(const std::string& what) : Error(ExitCode::degenerate_stratum, what) {}
};

}  // namespace fairnet
