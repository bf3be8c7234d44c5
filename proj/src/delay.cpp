// Copyright (C) 2026 The mavid Authors
// SPDX-License-Identifier: Apache-2.0

#include "mavid/delay.hpp"

namespace mavid {

DelayGrid apply_delay_pattern(const AudioClip& clip) {
    DelayGrid g;
    g.codebooks = clip.codebooks();
    g.width = clip.length() + clip.codebooks() - 1;
    g.ids.assign(static_cast<size_t>(g.codebooks) * g.width, audio_special::pad);
    for (int k = 0; k < clip.codebooks(); ++k)
        for (int t = 0; t < clip.length(); ++t) g.at(k, t + k) = clip.at(k, t);
    return g;
}

AudioClip remove_delay_pattern(const DelayGrid& grid, std::optional<int> expected_len) {
    if (grid.codebooks <= 0 || grid.width < grid.codebooks)
        fail(ErrorCode::MalformedGrid, "grid narrower than its codebook count");
    if (grid.ids.size() != static_cast<size_t>(grid.codebooks) * grid.width)
        fail(ErrorCode::MalformedGrid, "grid payload does not match its shape");
    const int len = grid.width - grid.codebooks + 1;
    if (expected_len && *expected_len != len)
        fail(ErrorCode::MalformedGrid, "grid width " + std::to_string(grid.width) + " != T_a + C - 1");
    AudioClip clip(grid.codebooks, len);
    for (int k = 0; k < grid.codebooks; ++k) {
        for (int c = 0; c < grid.width; ++c) {
            if (delay_cell_is_content(k, c, len)) {
                clip.at(k, c - k) = grid.at(k, c);
            } else if (grid.at(k, c) != audio_special::pad) {
                fail(ErrorCode::MalformedGrid, "content token in pad cell (" + std::to_string(k) + ", " +
                                                   std::to_string(c) + ")");
            }
        }
    }
    return clip;
}

}  // namespace mavid
