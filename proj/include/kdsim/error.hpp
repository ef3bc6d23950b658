#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kdsim {

enum class ErrorCode {
    NotHermitian,
    NotPSD,
    NonFinite,
    DimensionMismatch,
    StepTooLarge,
    InvalidProbability,
    InvalidModel,
    BadStep,
    NotContraction,
    NotNormalized,
    ZeroObservable,
    ConfigInvalid,
    ModelNotFound,
    IoError,
};

/// Module-qualified identifier, e.g. "linalg.NotPSD". Used in CLI error lines.
constexpr std::string_view error_code_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::NotHermitian: return "linalg.NotHermitian";
    case ErrorCode::NotPSD: return "linalg.NotPSD";
    case ErrorCode::NonFinite: return "linalg.NonFinite";
    case ErrorCode::DimensionMismatch: return "channels.DimensionMismatch";
    case ErrorCode::StepTooLarge: return "channels.StepTooLarge";
    case ErrorCode::InvalidProbability: return "channels.InvalidProbability";
    case ErrorCode::InvalidModel: return "channels.InvalidModel";
    case ErrorCode::BadStep: return "evolution.BadStep";
    case ErrorCode::NotContraction: return "dilation.NotContraction";
    case ErrorCode::NotNormalized: return "dilation.NotNormalized";
    case ErrorCode::ZeroObservable: return "measurement.ZeroObservable";
    case ErrorCode::ConfigInvalid: return "cli.ConfigInvalid";
    case ErrorCode::ModelNotFound: return "cli.ModelNotFound";
    case ErrorCode::IoError: return "cli.IoError";
    }
    return "unknown";
}

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string &what)
        : std::runtime_error(what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }
    [[nodiscard]] std::string_view code_name() const noexcept {
        return error_code_name(code_);
    }

  private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string &what) {
    throw Error(code, what);
}

} // namespace kdsim
