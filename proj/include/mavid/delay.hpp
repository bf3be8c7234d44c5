// Copyright (C) 2026 The mavid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>

#include "mavid/core_types.hpp"

namespace mavid {

// Staggered layout: codebook k is shifted right by k columns, so the grid is
// C x (T_a + C - 1) and every cell outside [k, k + T_a) holds pad.
struct DelayGrid {
    int codebooks = 0;
    int width = 0;
    std::vector<int32_t> ids;

    int32_t at(int k, int c) const { return ids[static_cast<size_t>(k) * width + c]; }
    int32_t& at(int k, int c) { return ids[static_cast<size_t>(k) * width + c]; }
    bool is_content(int k, int c) const { return c >= k && c < k + (width - codebooks + 1); }

    friend bool operator==(const DelayGrid&, const DelayGrid&) = default;
};

inline bool delay_cell_is_content(int k, int c, int audio_len) { return c >= k && c < k + audio_len; }

DelayGrid apply_delay_pattern(const AudioClip& clip);

// Exact inverse of apply_delay_pattern. Throws MalformedGrid when a pad cell
// holds anything but pad, or when the width does not equal expected_len + C - 1.
AudioClip remove_delay_pattern(const DelayGrid& grid, std::optional<int> expected_len = std::nullopt);

}  // namespace mavid
