#pragma once

#include <stdexcept>
#include <string>

namespace rails {

enum class ErrorKind {
    invalid_argument,
    dimension_mismatch,
    parse,
    io,
    singular,
    unstable,
    no_unique_solution,
    forcing_on_constraint,
    reduction_impossible,
    invalid_covariance,
    dimension_cap,
    oracle_scale,
    simulation_blowup,
};

inline const char* to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::invalid_argument: return "invalid argument";
    case ErrorKind::dimension_mismatch: return "dimension mismatch";
    case ErrorKind::parse: return "parse error";
    case ErrorKind::io: return "I/O error";
    case ErrorKind::singular: return "singular matrix";
    case ErrorKind::unstable: return "unstable pencil";
    case ErrorKind::no_unique_solution: return "no unique solution";
    case ErrorKind::forcing_on_constraint: return "forcing on constraint";
    case ErrorKind::reduction_impossible: return "reduction impossible";
    case ErrorKind::invalid_covariance: return "invalid covariance";
    case ErrorKind::dimension_cap: return "dimension cap exceeded";
    case ErrorKind::oracle_scale: return "problem too large for oracle";
    case ErrorKind::simulation_blowup: return "simulation blow-up";
    }
    return "unknown error";
}

/// All library failures are reported through this exception; kind() lets
/// callers (the CLI in particular) map failures onto exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline void require(bool condition, ErrorKind kind, const std::string& what)
{
    if (!condition) throw Error(kind, what);
}

} // namespace rails
