// Copyright (C) 2026 The mavid Authors
// SPDX-License-Identifier: Apache-2.0

#include "mavid/records.hpp"

#include "mavid/binary_io.hpp"

namespace mavid {

namespace {

constexpr char kMagic[5] = "MVRC";
constexpr int32_t kMaxDim = 1 << 24;

void write_header(std::ostream& os, RecordKind kind, int32_t a, int32_t b) {
    io::write_magic(os, kMagic);
    io::write_u32(os, kRecordVersion);
    io::write_u32(os, static_cast<uint32_t>(kind));
    io::write_i32(os, a);
    io::write_i32(os, b);
}

}  // namespace

void write_record(std::ostream& os, const AudioClip& clip) {
    write_header(os, RecordKind::audio_clip, clip.codebooks(), clip.length());
    for (auto id : clip.ids()) io::write_i32(os, id);
}

void write_record(std::ostream& os, const LatentClip& clip) {
    write_header(os, RecordKind::latent_clip, clip.length(), clip.channels());
    for (int i = 0; i < clip.length(); ++i)
        for (int d = 0; d < clip.channels(); ++d) io::write_f64(os, clip.latents(i, d));
}

void write_record(std::ostream& os, const TokenList& tokens) {
    write_header(os, RecordKind::token_list, static_cast<int32_t>(tokens.size()), 0);
    for (const auto& t : tokens) {
        io::write_i32(os, t.stream.kind == StreamKind::text ? -1 : t.stream.codebook);
        io::write_i32(os, t.id);
    }
}

Record read_record(std::istream& is) {
    io::expect_magic(is, kMagic, "record");
    uint32_t version = io::read_u32(is);
    if (version != kRecordVersion) fail(ErrorCode::FormatError, "unsupported record version " + std::to_string(version));
    uint32_t kind = io::read_u32(is);
    int32_t a = io::read_i32(is);
    int32_t b = io::read_i32(is);
    if (a < 0 || b < 0 || a > kMaxDim || b > kMaxDim) fail(ErrorCode::FormatError, "record shape out of range");
    switch (static_cast<RecordKind>(kind)) {
        case RecordKind::audio_clip: {
            std::vector<int32_t> ids(static_cast<size_t>(a) * b);
            for (auto& id : ids) id = io::read_i32(is);
            return AudioClip(a, b, std::move(ids));
        }
        case RecordKind::latent_clip: {
            Mat m(a, b);
            for (int i = 0; i < a; ++i)
                for (int d = 0; d < b; ++d) m(i, d) = io::read_f64(is);
            return LatentClip(std::move(m));
        }
        case RecordKind::token_list: {
            TokenList tokens(static_cast<size_t>(a));
            for (auto& t : tokens) {
                int32_t stream = io::read_i32(is);
                t.stream = stream < 0 ? Stream::text() : Stream::audio(stream);
                t.id = io::read_i32(is);
            }
            return tokens;
        }
    }
    fail(ErrorCode::FormatError, "unknown record kind " + std::to_string(kind));
}

}  // namespace mavid
