#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rfpose {

/// Failure category. The CLI maps each kind to a distinct exit code.
enum class ErrorKind {
    config,    ///< bad configuration or usage (exit 2)
    format,    ///< malformed or truncated data (exit 3)
    contract,  ///< shape mismatch or numeric contract violation (exit 4)
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

class FormatError : public Error {
public:
    explicit FormatError(const std::string& what) : Error(ErrorKind::format, what) {}
};

class ContractError : public Error {
public:
    explicit ContractError(const std::string& what) : Error(ErrorKind::contract, what) {}
};

/// Input whose byte length is not a whole number of encoded frames.
class TruncatedInputError : public FormatError {
public:
    TruncatedInputError(std::size_t frame_bytes, std::size_t actual_bytes)
        : FormatError("truncated input: expected a non-zero multiple of " +
                      std::to_string(frame_bytes) + " bytes, got " +
                      std::to_string(actual_bytes)),
          frame_bytes_(frame_bytes),
          actual_bytes_(actual_bytes) {}

    std::size_t frame_bytes() const noexcept { return frame_bytes_; }
    std::size_t actual_bytes() const noexcept { return actual_bytes_; }

private:
    std::size_t frame_bytes_;
    std::size_t actual_bytes_;
};

inline int exit_code(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::config: return 2;
        case ErrorKind::format: return 3;
        case ErrorKind::contract: return 4;
    }
    return 1;
}

}  // namespace rfpose
