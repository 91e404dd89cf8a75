#pragma once

#include <stdexcept>
#include <string>

namespace evolveq {

enum class ErrorKind {
    singular_gram,    // a Gram factorization failed: the space is invalid
    structural,       // eigensolver or linear solve failure
    evaluation,       // a coefficient or load function returned non-finite values
    numerical_range,  // matrix exponential outside representable range
    argument,         // caller passed an invalid argument
    contract,         // precondition of an operation not met
    tolerance,        // iterative method did not reach its tolerance
    config,           // malformed experiment configuration
    unknown_preset,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[nodiscard]] const char* to_string(ErrorKind kind) noexcept;

}  // namespace evolveq
