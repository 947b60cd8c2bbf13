#pragma once

#include <stdexcept>
#include <string>

namespace tcldro {

// Error taxonomy shared by the library and the CLI. The CLI maps these to
// process exit codes: config_error -> 2, numerical_error -> 3,
// data_error / domain_error -> 4.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid or inconsistent configuration (bad file, out-of-range setting).
struct config_error : error {
    using error::error;
};

// A numerical procedure failed to converge or degenerated (underflow,
// iteration cap, empty normalizer).
struct numerical_error : error {
    using error::error;
};

// Input data violates a structural precondition (length mismatch,
// unvisited state, non-stochastic column).
struct data_error : error {
    using error::error;
};

// Argument outside the documented domain of an operation.
struct domain_error : error {
    using error::error;
};

} // namespace tcldro
