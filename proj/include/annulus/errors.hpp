#pragma once

#include <stdexcept>
#include <string>

namespace annulus {

/// Invalid input to an operation (bad sizes, parameters outside their domain).
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A nonlinearity evaluation left the floating range (s^beta too large for exp).
class SaturationError : public std::overflow_error {
public:
    using std::overflow_error::overflow_error;
};

/// Failure of an iterative solver. The kind is stable and reported verbatim in
/// the CLI's structured error output.
class SolverError : public std::runtime_error {
public:
    enum class Kind {
        NoBracket,
        NewtonDiverged,
        NoSignChange,
        IterationCap,
        GeometryViolated,
        BracketExpansion,
        LineSearchStalled,
    };

    SolverError(Kind kind, const std::string& what, std::string detail = {})
        : std::runtime_error(what), kind_(kind), detail_(std::move(detail)) {}

    Kind kind() const noexcept { return kind_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    Kind kind_;
    std::string detail_;
};

/// A computed result broke a property it must satisfy by construction.
class InvariantViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

inline const char* to_string(SolverError::Kind k) {
    switch (k) {
    case SolverError::Kind::NoBracket: return "NoBracket";
    case SolverError::Kind::NewtonDiverged: return "NewtonDiverged";
    case SolverError::Kind::NoSignChange: return "NoSignChange";
    case SolverError::Kind::IterationCap: return "IterationCap";
    case SolverError::Kind::GeometryViolated: return "GeometryViolated";
    case SolverError::Kind::BracketExpansion: return "BracketExpansion";
    case SolverError::Kind::LineSearchStalled: return "LineSearchStalled";
    }
    return "Unknown";
}

}  // namespace annulus
