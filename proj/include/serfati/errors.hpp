#pragma once

#include <stdexcept>
#include <string>

namespace serfati {

/// Evaluation at a kernel singularity (coincident points, zero argument).
struct SingularityError : std::domain_error {
    using std::domain_error::domain_error;
};

/// Argument outside the mathematical domain of an operation.
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

/// Invalid configuration or parameter combination.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Quadrature failure, e.g. a non-integrable integrand.
struct QuadratureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Parameters outside the branch where a closed form is valid.
struct BranchError : std::domain_error {
    using std::domain_error::domain_error;
};

/// Boundary chart too small for the requested mollification radius.
struct ChartError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Requested initial data that has no bounded-velocity representative.
struct NotSerfatiError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Runtime guardrail breach during a simulation.
struct GuardrailError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// File system failure while writing outputs.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace serfati
