// Copyright (C) 2026 The mavid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <shared_mutex>
#include <string>
#include <vector>

#include "mavid/core_types.hpp"

namespace mavid {

enum class SegmentKind : uint8_t { text, speech_text, motion_text, audio_clip, video_clip, directive };
enum class SegmentRole : uint8_t { condition, generation };
enum class SequenceLayout : uint8_t { conductor, creator };

struct Segment {
    SegmentKind kind = SegmentKind::text;
    int clip_index = 0;  // only meaningful for clip kinds
    int begin = 0;
    int end = 0;
    SegmentRole role = SegmentRole::condition;

    int length() const { return end - begin; }
    bool is_clip() const { return kind == SegmentKind::audio_clip || kind == SegmentKind::video_clip; }

    friend bool operator==(const Segment&, const Segment&) = default;
};

struct SegmentedSequence {
    SequenceLayout layout = SequenceLayout::creator;
    int history_window = 1;  // creator only: how many earlier clips of the same modality SA may see
    std::vector<Segment> segments;
    int total_len = 0;

    // Index of the segment containing position `pos`.
    int segment_of(int pos) const;
    const Segment* find(SegmentKind kind, int clip_index) const;
    std::string shape_key() const;
};

// Row-major boolean matrix, queries x keys. true = attention allowed.
class AttentionMask {
public:
    AttentionMask() = default;
    AttentionMask(int queries, int keys, bool fill = false)
        : queries_(queries), keys_(keys), bits_(static_cast<size_t>(queries) * keys, fill ? 1 : 0) {}

    int queries() const { return queries_; }
    int keys() const { return keys_; }
    bool operator()(int q, int k) const { return bits_[static_cast<size_t>(q) * keys_ + k] != 0; }
    void set(int q, int k, bool v) { bits_[static_cast<size_t>(q) * keys_ + k] = v ? 1 : 0; }
    size_t count_true() const;

    AttentionMask select(const std::vector<int>& rows, const std::vector<int>& cols) const;

    // PBM-style grid: "P1", "<keys> <queries>", then one row of '0'/'1' per query.
    std::string to_pbm() const;

    friend bool operator==(const AttentionMask&, const AttentionMask&) = default;

private:
    int queries_ = 0;
    int keys_ = 0;
    std::vector<uint8_t> bits_;
};

// Creator audio clips occupy T_a + C positions: an audio_bos column followed by
// the T_a + C - 1 delay-grid columns.
int creator_audio_positions(int codebooks, int audio_len);

// [text, a_1, v_1, a_2, v_2, ...] plus an optional trailing directive region.
SegmentedSequence build_conductor_sequence(int text_len, const std::vector<AudioClip>& audio_clips,
                                           const std::vector<LatentClip>& video_clips, int directive_len = 0);

// [speech text, motion text, a_j0, v_j0, a_j0+1, v_j0+1, ...].
SegmentedSequence build_creator_sequence(const DirectivePair& directives, const std::vector<AudioClip>& audio_clips,
                                         const std::vector<LatentClip>& video_clips, int first_clip_index = 0,
                                         int history_window = 1);

// Base self-attention mask implied by the segment layout.
AttentionMask derive_masks(const SegmentedSequence& seq);

// Cross-attention routes of the creator: for each generation clip segment, the
// segments it reads through the fusion module (audio j <- video j-1 suffix,
// video j <- motion text and audio j windows).
struct CrossRoute {
    int query_segment;
    int key_segment;
};
std::vector<CrossRoute> cross_attention_routes(const SegmentedSequence& seq);

// Shape-keyed mask cache safe for concurrent readers.
class MaskCache {
public:
    std::shared_ptr<const AttentionMask> get(const SegmentedSequence& seq);
    size_t size() const;

    static MaskCache& global();

private:
    mutable std::shared_mutex mutex_;
    std::map<std::string, std::shared_ptr<const AttentionMask>> cache_;
};

}  // namespace mavid
