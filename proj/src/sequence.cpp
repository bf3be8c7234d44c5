// Copyright (C) 2026 The mavid Authors
// SPDX-License-Identifier: Apache-2.0

#include "mavid/sequence.hpp"

#include <algorithm>
#include <mutex>
#include <sstream>

namespace mavid {

int SegmentedSequence::segment_of(int pos) const {
    for (size_t i = 0; i < segments.size(); ++i)
        if (pos >= segments[i].begin && pos < segments[i].end) return static_cast<int>(i);
    fail(ErrorCode::IndexOutOfRange, "position " + std::to_string(pos) + " outside sequence");
}

const Segment* SegmentedSequence::find(SegmentKind kind, int clip_index) const {
    for (const auto& s : segments)
        if (s.kind == kind && (!s.is_clip() || s.clip_index == clip_index)) return &s;
    return nullptr;
}

std::string SegmentedSequence::shape_key() const {
    std::ostringstream os;
    os << static_cast<int>(layout) << '/' << history_window;
    for (const auto& s : segments)
        os << '|' << static_cast<int>(s.kind) << ':' << s.clip_index << ':' << s.length() << ':'
           << static_cast<int>(s.role);
    return os.str();
}

size_t AttentionMask::count_true() const {
    return static_cast<size_t>(std::count(bits_.begin(), bits_.end(), uint8_t{1}));
}

AttentionMask AttentionMask::select(const std::vector<int>& rows, const std::vector<int>& cols) const {
    AttentionMask out(static_cast<int>(rows.size()), static_cast<int>(cols.size()));
    for (size_t r = 0; r < rows.size(); ++r)
        for (size_t c = 0; c < cols.size(); ++c) out.set(static_cast<int>(r), static_cast<int>(c), (*this)(rows[r], cols[c]));
    return out;
}

std::string AttentionMask::to_pbm() const {
    std::string out = "P1\n" + std::to_string(keys_) + " " + std::to_string(queries_) + "\n";
    out.reserve(out.size() + static_cast<size_t>(queries_) * (keys_ + 1));
    for (int q = 0; q < queries_; ++q) {
        for (int k = 0; k < keys_; ++k) out.push_back((*this)(q, k) ? '1' : '0');
        out.push_back('\n');
    }
    return out;
}

int creator_audio_positions(int codebooks, int audio_len) { return audio_len + codebooks; }

namespace {

void push(SegmentedSequence& seq, SegmentKind kind, int clip_index, int len, SegmentRole role) {
    Segment s;
    s.kind = kind;
    s.clip_index = clip_index;
    s.begin = seq.total_len;
    s.end = seq.total_len + len;
    s.role = role;
    seq.segments.push_back(s);
    seq.total_len = s.end;
}

void require_equal_counts(size_t a, size_t v) {
    if (a != v)
        fail(ErrorCode::ClipCountMismatch,
             std::to_string(a) + " audio clips vs " + std::to_string(v) + " video clips");
}

}  // namespace

SegmentedSequence build_conductor_sequence(int text_len, const std::vector<AudioClip>& audio_clips,
                                           const std::vector<LatentClip>& video_clips, int directive_len) {
    require_equal_counts(audio_clips.size(), video_clips.size());
    SegmentedSequence seq;
    seq.layout = SequenceLayout::conductor;
    if (text_len > 0) push(seq, SegmentKind::text, 0, text_len, SegmentRole::condition);
    for (size_t i = 0; i < audio_clips.size(); ++i) {
        push(seq, SegmentKind::audio_clip, static_cast<int>(i), audio_clips[i].length(), SegmentRole::condition);
        push(seq, SegmentKind::video_clip, static_cast<int>(i), video_clips[i].length(), SegmentRole::condition);
    }
    if (directive_len > 0) push(seq, SegmentKind::directive, 0, directive_len, SegmentRole::generation);
    return seq;
}

SegmentedSequence build_creator_sequence(const DirectivePair& directives, const std::vector<AudioClip>& audio_clips,
                                         const std::vector<LatentClip>& video_clips, int first_clip_index,
                                         int history_window) {
    require_equal_counts(audio_clips.size(), video_clips.size());
    SegmentedSequence seq;
    seq.layout = SequenceLayout::creator;
    seq.history_window = history_window;
    push(seq, SegmentKind::speech_text, 0, static_cast<int>(directives.speech.size()), SegmentRole::condition);
    push(seq, SegmentKind::motion_text, 0, static_cast<int>(directives.motion.size()), SegmentRole::condition);
    for (size_t i = 0; i < audio_clips.size(); ++i) {
        const int j = first_clip_index + static_cast<int>(i);
        const auto& a = audio_clips[i];
        push(seq, SegmentKind::audio_clip, j, creator_audio_positions(a.codebooks(), a.length()),
             SegmentRole::generation);
        push(seq, SegmentKind::video_clip, j, video_clips[i].length(), SegmentRole::generation);
    }
    return seq;
}

namespace {

bool causal_within(SegmentKind kind) { return kind == SegmentKind::audio_clip || kind == SegmentKind::directive; }

bool creator_visible(const SegmentedSequence& seq, const Segment& q, const Segment& k) {
    auto in_history = [&](const Segment& key) {
        return key.clip_index < q.clip_index && key.clip_index >= q.clip_index - seq.history_window;
    };
    switch (q.kind) {
        case SegmentKind::audio_clip:
            return k.kind == SegmentKind::speech_text || (k.kind == SegmentKind::audio_clip && in_history(k));
        case SegmentKind::video_clip:
            return k.kind == SegmentKind::video_clip && in_history(k);
        default:
            return false;
    }
}

AttentionMask build_mask(const SegmentedSequence& seq) {
    AttentionMask mask(seq.total_len, seq.total_len);
    for (size_t qi = 0; qi < seq.segments.size(); ++qi) {
        const Segment& q = seq.segments[qi];
        for (size_t ki = 0; ki < seq.segments.size(); ++ki) {
            const Segment& k = seq.segments[ki];
            if (qi == ki) {
                const bool causal = causal_within(q.kind);
                for (int a = q.begin; a < q.end; ++a)
                    for (int b = k.begin; b < (causal ? a + 1 : k.end); ++b) mask.set(a, b, true);
                continue;
            }
            bool visible = seq.layout == SequenceLayout::conductor ? ki < qi : creator_visible(seq, q, k);
            if (!visible) continue;
            for (int a = q.begin; a < q.end; ++a)
                for (int b = k.begin; b < k.end; ++b) mask.set(a, b, true);
        }
    }
    return mask;
}

}  // namespace

AttentionMask derive_masks(const SegmentedSequence& seq) { return build_mask(seq); }

std::vector<CrossRoute> cross_attention_routes(const SegmentedSequence& seq) {
    std::vector<CrossRoute> routes;
    if (seq.layout != SequenceLayout::creator) return routes;
    for (size_t qi = 0; qi < seq.segments.size(); ++qi) {
        const Segment& q = seq.segments[qi];
        for (size_t ki = 0; ki < seq.segments.size(); ++ki) {
            const Segment& k = seq.segments[ki];
            bool route = false;
            if (q.kind == SegmentKind::audio_clip)
                route = k.kind == SegmentKind::video_clip && k.clip_index == q.clip_index - 1;
            else if (q.kind == SegmentKind::video_clip)
                route = k.kind == SegmentKind::motion_text ||
                        (k.kind == SegmentKind::audio_clip && k.clip_index == q.clip_index);
            if (route) routes.push_back({static_cast<int>(qi), static_cast<int>(ki)});
        }
    }
    return routes;
}

std::shared_ptr<const AttentionMask> MaskCache::get(const SegmentedSequence& seq) {
    const std::string key = seq.shape_key();
    {
        std::shared_lock lock(mutex_);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    auto mask = std::make_shared<const AttentionMask>(build_mask(seq));
    std::unique_lock lock(mutex_);
    auto [it, inserted] = cache_.emplace(key, std::move(mask));
    return it->second;
}

size_t MaskCache::size() const {
    std::shared_lock lock(mutex_);
    return cache_.size();
}

MaskCache& MaskCache::global() {
    static MaskCache cache;
    return cache;
}

}  // namespace mavid
