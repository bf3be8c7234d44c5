// Copyright (C) 2026 The mavid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <string>

namespace mavid {

// Flat "key = value" text. '#' starts a comment; blank lines are ignored.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(const std::string& text);
std::string format_key_values(const KeyValues& kv);

// Typed accessors raising InvalidConfig on malformed values.
int kv_int(const KeyValues& kv, const std::string& key, int fallback);
double kv_double(const KeyValues& kv, const std::string& key, double fallback);
bool kv_bool(const KeyValues& kv, const std::string& key, bool fallback);
uint64_t kv_u64(const KeyValues& kv, const std::string& key, uint64_t fallback);
std::string kv_string(const KeyValues& kv, const std::string& key, const std::string& fallback);

}  // namespace mavid
