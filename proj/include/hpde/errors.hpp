#pragma once

#include <stdexcept>
#include <string>

namespace hpde {

// Bad arguments: dimension mismatches, out-of-range indices, invalid specs.
struct DomainError : std::invalid_argument {
    explicit DomainError(const std::string& msg) : std::invalid_argument(msg) {}
};

// A point was handed to an operator outside its cone of definition.
struct OutsideConeError : std::runtime_error {
    explicit OutsideConeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Rejection sampler exhausted its retry budget.
struct SamplingError : std::runtime_error {
    explicit SamplingError(const std::string& msg) : std::runtime_error(msg) {}
};

// Iterative numerical kernel failed to converge within its cap.
struct NumericalError : std::runtime_error {
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// A requested level value is outside the attainable range of f on the diagonal.
struct RangeError : std::runtime_error {
    explicit RangeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Metric not positive definite, or similar geometric breakdown.
struct GeometryError : std::runtime_error {
    explicit GeometryError(const std::string& msg) : std::runtime_error(msg) {}
};

// Cone condition fails up to the search bound; carries the worst node.
struct NoSubsolutionError : std::runtime_error {
    long long worst_node;
    NoSubsolutionError(const std::string& msg, long long node)
        : std::runtime_error(msg), worst_node(node) {}
};

// Newton line search underflowed while trying to stay admissible.
struct NonAdmissibleStepError : std::runtime_error {
    explicit NonAdmissibleStepError(const std::string& msg) : std::runtime_error(msg) {}
};

// Newton hit its iteration cap.
struct NoConvergenceError : std::runtime_error {
    explicit NoConvergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

// Continuation step underflowed; carries the last t that solved.
struct ContinuationStuckError : std::runtime_error {
    double last_good_t;
    ContinuationStuckError(const std::string& msg, double t)
        : std::runtime_error(msg), last_good_t(t) {}
};

// Inner linear solve could not meet its residual contract.
struct LinearSolveError : std::runtime_error {
    explicit LinearSolveError(const std::string& msg) : std::runtime_error(msg) {}
};

// Config file rejected; carries the offending line number (0 if global).
struct ConfigError : std::runtime_error {
    int line;
    ConfigError(const std::string& msg, int line_no) : std::runtime_error(msg), line(line_no) {}
};

}  // namespace hpde
