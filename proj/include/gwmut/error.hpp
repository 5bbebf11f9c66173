#pragma once

#include <stdexcept>
#include <string>

namespace gwmut {

enum class ErrorKind {
    InvalidLaw,
    InfeasibleLaw,
    CapTooSmall,
    NonConvergence,
    InvalidRegime,
    PopulationCapExceeded,
    IncompleteForest,
    WalkCapExceeded,
    DegenerateLevel,
    DomainError,
    EmptySample,
    InsufficientStrata,
    RegimeMismatch,
    Usage,
};

const char* error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(error_kind_name(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

// Cap errors carry the partial counts gathered before the cap tripped.
class CapError : public Error {
public:
    CapError(ErrorKind kind, const std::string& what, long long nodes, long long types)
        : Error(kind, what), nodes_(nodes), types_(types) {}

    long long nodes() const { return nodes_; }
    long long types() const { return types_; }

private:
    long long nodes_;
    long long types_;
};

}  // namespace gwmut
