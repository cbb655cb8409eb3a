#pragma once

#include <stdexcept>
#include <string>

namespace ganbench {

// Error taxonomy shared by the whole library. The CLI maps these onto
// process exit codes: contract violations -> 2, data/format problems -> 3,
// numeric failures -> 4.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Caller broke an API precondition (bad config, invalid argument).
struct ContractError : Error {
    using Error::Error;
};

// Tensor shapes do not line up.
struct DimensionError : ContractError {
    using ContractError::ContractError;
};

// Mathematically ill-posed request (e.g. reducing over zero elements).
struct DomainError : ContractError {
    using ContractError::ContractError;
};

// Malformed external bytes: bad magic, truncation, unparsable JSON.
struct FormatError : Error {
    using Error::Error;
};

// Bytes parse but the contents contradict themselves (count mismatch,
// label out of range).
struct ConsistencyError : FormatError {
    using FormatError::FormatError;
};

// Filesystem failure.
struct IoError : Error {
    using Error::Error;
};

// NaN/Inf surfaced in a computation; fail fast instead of propagating.
struct NumericError : Error {
    using Error::Error;
};

}  // namespace ganbench
