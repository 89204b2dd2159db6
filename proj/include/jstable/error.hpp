#pragma once

#include <stdexcept>
#include <string>

namespace jstable {

enum class ErrorKind {
    invalid_argument,
    invalid_density,
    invalid_config,
    invalid_move,
    invalid_threshold,
    dimension_mismatch,
    singular_fit,
    degenerate_data,
    degenerate_overlap,
    degenerate_regime,
    insufficient_samples,
    insufficient_data,
    malformed_input,
    io_failure,
};

const char* to_string(ErrorKind k);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace jstable
