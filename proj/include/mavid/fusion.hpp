// Copyright (C) 2026 The mavid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <utility>

#include "mavid/autograd.hpp"
#include "mavid/core_types.hpp"
#include "mavid/nn.hpp"

namespace mavid {

struct FusionWindows {
    int f_v_len = 10;  // latents of the previous clip fed to the audio path
    int f_a_len = 4;   // audio tokens per latent fed to the video path
    int frames_per_latent = 4;
    int ms_per_token = 10;
    int fps = 100;

    static FusionWindows from_config(const ModelConfig& c);
    void validate() const;
};

// Half-open [begin, end) interval.
struct Span {
    int begin = 0;
    int end = 0;
    int length() const { return end - begin; }
    friend bool operator==(const Span&, const Span&) = default;
};

// Suffix of min(f_v_len, prev_len) rows.
Span video_context_span(int prev_len, const FusionWindows& w);
LatentClip select_video_context(const LatentClip& v_prev, const FusionWindows& w);

// First token aligned with a latent: floor(i * frames_per_latent / fps * 1000 / ms_per_token).
int aligned_token_index(int latent_index, const FusionWindows& w);

// Token window of latent `latent_index`: [p, p + f_a_len) clamped to the clip end.
// When p falls past the clip, the last min(f_a_len, T_a) tokens are used.
Span audio_window_span(int latent_index, int latent_count, int audio_len, const FusionWindows& w);
AudioClip align_audio_window(int latent_index, int latent_count, const AudioClip& a_cur, const FusionWindows& w);

// Query rows [0, n_prev) see nothing; query row n_prev + i sees the window of latent i.
AttentionMask audio_window_mask(int n_prev, int n_cur, int audio_len, const FusionWindows& w);

// Attention weights of one decoder layer's fusion path.
struct FusionLayer {
    nn::AttentionBlock audio_sa;
    nn::AttentionBlock audio_ca;   // audio <- F_v(SA(v_{j-1}))
    nn::AttentionBlock video_sa;
    nn::AttentionBlock motion_ca;  // video <- T_M
    nn::AttentionBlock window_ca;  // video <- F_a(a_j)
};

// Audio fusion: CA(SA([T_S o a_prev o a_cur]), F_v(v_prev_sa)).
// `v_prev_sa` is the video path's self-attention output for the previous clip.
// Output keeps the concatenated query length.
ag::Var audio_fusion_step(const FusionLayer& layer, const ag::Var& speech, const ag::Var& a_prev,
                          const ag::Var& a_cur, const ag::Var& v_prev_sa, const AttentionMask& audio_mask,
                          const FusionWindows& w, int n_heads, bool use_video_context = true);

// SA([v_prev o v_cur]) under `video_mask`.
ag::Var video_self_attention(const FusionLayer& layer, const ag::Var& v_prev, const ag::Var& v_cur,
                             const AttentionMask& video_mask, int n_heads);

// CA(CA(h, T_M), F_a(a_feat)) on the self-attended video rows `h`; the first
// `n_prev` rows belong to the previous clip and skip the audio window CA.
// `a_feat` holds one row per audio time step of the current clip.
ag::Var video_cross_fusion(const FusionLayer& layer, const ag::Var& h, int n_prev, const ag::Var& motion,
                           const ag::Var& a_feat, const FusionWindows& w, int n_heads, bool use_audio = true);

// Video fusion: CA(CA(SA([v_prev o v_cur]), T_M), F_a(a_cur)).
ag::Var video_fusion_step(const FusionLayer& layer, const ag::Var& v_prev, const ag::Var& v_cur,
                          const ag::Var& motion, const ag::Var& a_feat, const AttentionMask& video_mask,
                          const FusionWindows& w, int n_heads);

}  // namespace mavid
