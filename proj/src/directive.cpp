// Copyright (C) 2026 The mavid Authors
// SPDX-License-Identifier: Apache-2.0

#include "mavid/directive.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>
#include <sstream>

namespace mavid {

DirectiveWire encode_directives(const DirectivePair& pair) {
    DirectiveWire wire;
    wire.tokens.reserve(pair.speech.size() + pair.motion.size() + 2);
    wire.tokens.insert(wire.tokens.end(), pair.speech.begin(), pair.speech.end());
    wire.tokens.push_back(Token::text(text_special::m_bos));
    wire.tokens.insert(wire.tokens.end(), pair.motion.begin(), pair.motion.end());
    wire.tokens.push_back(Token::text(text_special::m_eos));
    return wire;
}

DirectivePair decode_directives(const TokenList& wire) {
    enum class State { speech, motion, done } state = State::speech;
    DirectivePair pair;
    for (size_t i = 0; i < wire.size(); ++i) {
        const Token& t = wire[i];
        if (t.stream.kind != StreamKind::text) fail(ErrorCode::InvalidArgument, "non-text token in directive wire");
        if (state == State::done) fail(ErrorCode::TrailingTokens, "content after m_eos at index " + std::to_string(i));
        if (t.id == text_special::m_bos) {
            if (state == State::motion) fail(ErrorCode::NestedFrame, "second m_bos at index " + std::to_string(i));
            state = State::motion;
        } else if (t.id == text_special::m_eos) {
            if (state == State::speech) fail(ErrorCode::MissingFrame, "m_eos without preceding m_bos");
            state = State::done;
        } else if (t.is_special()) {
            fail(ErrorCode::InvalidArgument, "unexpected special token at index " + std::to_string(i));
        } else {
            (state == State::speech ? pair.speech : pair.motion).push_back(t);
        }
    }
    if (state == State::speech) fail(ErrorCode::MissingFrame, "no m_bos in wire");
    if (state == State::motion) fail(ErrorCode::MissingFrame, "no m_eos in wire");
    return pair;
}

DirectiveWire build_mixed_sample(const RawResponse& record, bool has_motion) {
    DirectivePair pair;
    pair.speech = record.response;
    if (has_motion) pair.motion = record.motion;
    return encode_directives(pair);
}

std::vector<DirectiveWire> make_mixed_samples(int n, double null_ratio, uint64_t seed, int text_vocab) {
    if (n < 0 || null_ratio < 0.0 || null_ratio > 1.0) fail(ErrorCode::InvalidArgument, "bad mixed-sample request");
    std::mt19937_64 rng(seed);
    const int n_null = static_cast<int>(std::lround(null_ratio * n));
    std::vector<bool> has_motion(static_cast<size_t>(n), true);
    std::fill_n(has_motion.begin(), n_null, false);
    std::shuffle(has_motion.begin(), has_motion.end(), rng);

    std::uniform_int_distribution<int32_t> content(text_special::count, text_vocab - 1);
    std::uniform_int_distribution<int> len(1, 6);
    std::vector<DirectiveWire> out;
    out.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        RawResponse rec;
        for (int k = len(rng); k > 0; --k) rec.response.push_back(Token::text(content(rng)));
        for (int k = len(rng); k > 0; --k) rec.motion.push_back(Token::text(content(rng)));
        out.push_back(build_mixed_sample(rec, has_motion[static_cast<size_t>(i)]));
    }
    return out;
}

std::string format_wire(const TokenList& tokens) {
    std::ostringstream os;
    for (size_t i = 0; i < tokens.size(); ++i) {
        if (i) os << ' ';
        switch (tokens[i].id) {
            case text_special::pad: os << "<pad>"; break;
            case text_special::m_bos: os << "<m_bos>"; break;
            case text_special::m_eos: os << "<m_eos>"; break;
            case text_special::clip_sep: os << "<clip_sep>"; break;
            default: os << tokens[i].id;
        }
    }
    return os.str();
}

TokenList parse_wire(std::string_view line) {
    TokenList out;
    size_t pos = 0;
    while (pos < line.size()) {
        while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
        if (pos >= line.size()) break;
        size_t end = pos;
        while (end < line.size() && !std::isspace(static_cast<unsigned char>(line[end]))) ++end;
        std::string_view field = line.substr(pos, end - pos);
        pos = end;
        if (field == "<pad>") out.push_back(Token::text(text_special::pad));
        else if (field == "<m_bos>") out.push_back(Token::text(text_special::m_bos));
        else if (field == "<m_eos>") out.push_back(Token::text(text_special::m_eos));
        else if (field == "<clip_sep>") out.push_back(Token::text(text_special::clip_sep));
        else {
            int32_t id = 0;
            auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), id);
            if (ec != std::errc() || ptr != field.data() + field.size() || id < 0)
                fail(ErrorCode::FormatError, "bad token field '" + std::string(field) + "'");
            out.push_back(Token::text(id));
        }
    }
    return out;
}

}  // namespace mavid
