// Copyright (C) 2026 The mavid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mavid {

enum class ErrorCode {
    InvalidConfig,
    InvalidArgument,
    MissingFrame,
    NestedFrame,
    TrailingTokens,
    ClipCountMismatch,
    DimensionMismatch,
    IndexOutOfRange,
    MalformedGrid,
    LengthMismatch,
    ShapeMismatch,
    DecodeOverflow,
    RefOnLaterClip,
    TooFewClips,
    StageOrderViolation,
    ConfigMismatch,
    FormatError,
    IoError,
};

std::string_view error_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_name(code)) + ": " + message), code_(code), message_(message) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& message() const noexcept { return message_; }

private:
    ErrorCode code_;
    std::string message_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace mavid
