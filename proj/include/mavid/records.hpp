// Copyright (C) 2026 The mavid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <istream>
#include <ostream>
#include <variant>

#include "mavid/core_types.hpp"

namespace mavid {

// Versioned binary record for clips and token lists. Layout (all little-endian):
//   "MVRC" | u32 version | u32 kind | i32 shape[2] | payload
// kind 1: audio clip, shape (C, T_a), payload C*T_a i32 ids, row-major.
// kind 2: latent clip, shape (L, D), payload L*D f64, row-major.
// kind 3: token list, shape (n, 0), payload n * (i32 stream, i32 id); stream -1 = text, k >= 0 = audio[k].
inline constexpr uint32_t kRecordVersion = 1;

enum class RecordKind : uint32_t { audio_clip = 1, latent_clip = 2, token_list = 3 };

using Record = std::variant<AudioClip, LatentClip, TokenList>;

void write_record(std::ostream& os, const AudioClip& clip);
void write_record(std::ostream& os, const LatentClip& clip);
void write_record(std::ostream& os, const TokenList& tokens);

Record read_record(std::istream& is);

template <typename T>
T read_record_as(std::istream& is) {
    auto rec = read_record(is);
    if (auto* p = std::get_if<T>(&rec)) return std::move(*p);
    fail(ErrorCode::FormatError, "unexpected record kind");
}

}  // namespace mavid
