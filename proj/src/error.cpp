// Copyright (C) 2026 The mavid Authors
// SPDX-License-Identifier: Apache-2.0

#include "mavid/error.hpp"

namespace mavid {

std::string_view error_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::MissingFrame: return "MissingFrame";
        case ErrorCode::NestedFrame: return "NestedFrame";
        case ErrorCode::TrailingTokens: return "TrailingTokens";
        case ErrorCode::ClipCountMismatch: return "ClipCountMismatch";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorCode::MalformedGrid: return "MalformedGrid";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::DecodeOverflow: return "DecodeOverflow";
        case ErrorCode::RefOnLaterClip: return "RefOnLaterClip";
        case ErrorCode::TooFewClips: return "TooFewClips";
        case ErrorCode::StageOrderViolation: return "StageOrderViolation";
        case ErrorCode::ConfigMismatch: return "ConfigMismatch";
        case ErrorCode::FormatError: return "FormatError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace mavid
