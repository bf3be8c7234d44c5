// Copyright (C) 2026 The mavid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "mavid/error.hpp"

namespace mavid::io {

// Fixed little-endian encoding regardless of host order.
inline void write_u32(std::ostream& os, uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
    os.write(b, 4);
}

inline void write_u64(std::ostream& os, uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
    os.write(b, 8);
}

inline void write_i32(std::ostream& os, int32_t v) { write_u32(os, static_cast<uint32_t>(v)); }
inline void write_f64(std::ostream& os, double v) { write_u64(os, std::bit_cast<uint64_t>(v)); }

inline void write_string(std::ostream& os, const std::string& s) {
    write_u32(os, static_cast<uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline void read_exact(std::istream& is, char* dst, size_t n) {
    is.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<size_t>(is.gcount()) != n) fail(ErrorCode::FormatError, "unexpected end of stream");
}

inline uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    read_exact(is, reinterpret_cast<char*>(b), 4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
    return v;
}

inline uint64_t read_u64(std::istream& is) {
    unsigned char b[8];
    read_exact(is, reinterpret_cast<char*>(b), 8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
}

inline int32_t read_i32(std::istream& is) { return static_cast<int32_t>(read_u32(is)); }
inline double read_f64(std::istream& is) { return std::bit_cast<double>(read_u64(is)); }

inline std::string read_string(std::istream& is, size_t max_len = 1u << 24) {
    uint32_t n = read_u32(is);
    if (n > max_len) fail(ErrorCode::FormatError, "string length exceeds limit");
    std::string s(n, '\0');
    if (n > 0) read_exact(is, s.data(), n);
    return s;
}

inline void write_magic(std::ostream& os, const char (&magic)[5]) { os.write(magic, 4); }

inline void expect_magic(std::istream& is, const char (&magic)[5], const char* what) {
    char b[4];
    read_exact(is, b, 4);
    if (std::memcmp(b, magic, 4) != 0) fail(ErrorCode::FormatError, std::string("bad magic for ") + what);
}

// FNV-1a, used for config and prompt hashes.
inline uint64_t fnv1a(const std::string& s) {
    uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace mavid::io
