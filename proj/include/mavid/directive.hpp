// Copyright (C) 2026 The mavid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mavid/core_types.hpp"

namespace mavid {

// Flat directive stream: [speech..., m_bos, motion..., m_eos].
struct DirectiveWire {
    TokenList tokens;

    friend bool operator==(const DirectiveWire&, const DirectiveWire&) = default;
};

DirectiveWire encode_directives(const DirectivePair& pair);

// Strict parse. Malformed wires raise MissingFrame, NestedFrame or TrailingTokens;
// stray specials inside either part raise InvalidArgument.
DirectivePair decode_directives(const TokenList& wire);

// A raw synthetic response. `motion` is ignored unless the sample carries motion.
struct RawResponse {
    TokenList response;
    TokenList motion;
};

// Null-motion samples put the whole response into speech and leave motion empty.
DirectiveWire build_mixed_sample(const RawResponse& record, bool has_motion);

// Exactly round(null_ratio * n) of the returned samples carry empty motion, in
// a seeded shuffled order.
std::vector<DirectiveWire> make_mixed_samples(int n, double null_ratio, uint64_t seed, int text_vocab);

// Text dump: whitespace separated ids, specials as <m_bos>, <m_eos>, <pad>, <clip_sep>.
std::string format_wire(const TokenList& tokens);
TokenList parse_wire(std::string_view line);

}  // namespace mavid
