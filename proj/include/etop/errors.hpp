#pragma once

#include <stdexcept>
#include <string>

namespace etop {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad geometry, supports matching nothing, symmetry/domain mismatch.
struct GeometryError : Error {
    using Error::Error;
};

// Out-of-range densities, malformed parameters, shape mismatches.
struct DomainError : Error {
    using Error::Error;
};

// Assembly and eigensolver failures.
struct SolverError : Error {
    using Error::Error;
};

// Config parsing / validation failures; message names the offending key path.
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace etop
