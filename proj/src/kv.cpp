// Copyright (C) 2026 The mavid Authors
// SPDX-License-Identifier: Apache-2.0

#include "mavid/kv.hpp"

#include <charconv>
#include <sstream>

#include "mavid/error.hpp"

namespace mavid {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const KeyValues& kv, const std::string& key, T fallback) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    const std::string& s = it->second;
    T value{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size())
        fail(ErrorCode::InvalidConfig, "key '" + key + "' has malformed value '" + s + "'");
    return value;
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
    KeyValues kv;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            fail(ErrorCode::InvalidConfig, "line " + std::to_string(line_no) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        if (key.empty()) fail(ErrorCode::InvalidConfig, "line " + std::to_string(line_no) + ": empty key");
        if (!kv.emplace(key, trim(line.substr(eq + 1))).second)
            fail(ErrorCode::InvalidConfig, "line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
    return kv;
}

std::string format_key_values(const KeyValues& kv) {
    std::string out;
    for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
    return out;
}

int kv_int(const KeyValues& kv, const std::string& key, int fallback) { return parse_number(kv, key, fallback); }

uint64_t kv_u64(const KeyValues& kv, const std::string& key, uint64_t fallback) {
    return parse_number(kv, key, fallback);
}

double kv_double(const KeyValues& kv, const std::string& key, double fallback) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    try {
        size_t used = 0;
        double v = std::stod(it->second, &used);
        if (used != it->second.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        fail(ErrorCode::InvalidConfig, "key '" + key + "' has malformed value '" + it->second + "'");
    }
}

bool kv_bool(const KeyValues& kv, const std::string& key, bool fallback) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    fail(ErrorCode::InvalidConfig, "key '" + key + "' expects true or false");
}

std::string kv_string(const KeyValues& kv, const std::string& key, const std::string& fallback) {
    auto it = kv.find(key);
    return it == kv.end() ? fallback : it->second;
}

}  // namespace mavid
