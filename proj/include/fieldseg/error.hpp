#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fieldseg {

enum class ErrorCode {
    OutOfBounds,
    InvalidArgument,
    MalformedHeader,
    UnsupportedMaxval,
    TruncatedPayload,
    InvalidRho,
    InvalidM,
    DegenerateRegion,
    WindowMismatch,
    BadMagic,
    UnsupportedVersion,
    InconsistentDims,
    InvalidSpec,
    ShapeMismatch,
    EmptyDataset,
    UntrainedModel,
    EmptyHistogram,
    TooSmall,
    ZeroVariance,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace fieldseg
