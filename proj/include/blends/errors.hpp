#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace blends {

/// Machine-parsable error categories. The numeric value doubles as the CLI exit code.
enum class ErrorCode : int {
    kArgument = 2,
    kDomain = 3,
    kFormat = 4,
    kNumerical = 5,
    kProvider = 6,
    kConfig = 7,
};

constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::kArgument: return "ARGUMENT";
        case ErrorCode::kDomain: return "DOMAIN";
        case ErrorCode::kFormat: return "FORMAT";
        case ErrorCode::kNumerical: return "NUMERICAL";
        case ErrorCode::kProvider: return "PROVIDER";
        case ErrorCode::kConfig: return "CONFIG";
    }
    return "UNKNOWN";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

struct ArgumentError : Error {
    explicit ArgumentError(const std::string& what) : Error(ErrorCode::kArgument, what) {}
};

struct DomainError : Error {
    explicit DomainError(const std::string& what) : Error(ErrorCode::kDomain, what) {}
};

struct FormatError : Error {
    explicit FormatError(const std::string& what) : Error(ErrorCode::kFormat, what) {}
};

struct NumericalError : Error {
    explicit NumericalError(const std::string& what) : Error(ErrorCode::kNumerical, what) {}
};

struct ProviderError : Error {
    ProviderError(std::size_t epoch, const std::string& what)
        : Error(ErrorCode::kProvider, "epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}
    std::size_t epoch() const noexcept { return epoch_; }

private:
    std::size_t epoch_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(ErrorCode::kConfig, what) {}
};

}  // namespace blends
