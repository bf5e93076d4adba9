#include "fieldseg/error.hpp"

namespace fieldseg {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::UnsupportedMaxval: return "UnsupportedMaxval";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::InvalidRho: return "InvalidRho";
    case ErrorCode::InvalidM: return "InvalidM";
    case ErrorCode::DegenerateRegion: return "DegenerateRegion";
    case ErrorCode::WindowMismatch: return "WindowMismatch";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::InconsistentDims: return "InconsistentDims";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::UntrainedModel: return "UntrainedModel";
    case ErrorCode::EmptyHistogram: return "EmptyHistogram";
    case ErrorCode::TooSmall: return "TooSmall";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    }
    return "Unknown";
}

} // namespace fieldseg
