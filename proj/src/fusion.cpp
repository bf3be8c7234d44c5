// Copyright (C) 2026 The mavid Authors
// SPDX-License-Identifier: Apache-2.0

#include "mavid/fusion.hpp"

#include <algorithm>

namespace mavid {

FusionWindows FusionWindows::from_config(const ModelConfig& c) {
    return {c.f_v_window, c.f_a_window, c.frames_per_latent, c.ms_per_token, c.fps};
}

void FusionWindows::validate() const {
    if (f_v_len < 1 || f_a_len < 1) fail(ErrorCode::InvalidConfig, "fusion windows must be >= 1");
    if (frames_per_latent <= 0 || ms_per_token <= 0 || fps <= 0) fail(ErrorCode::InvalidConfig, "rates must be positive");
}

Span video_context_span(int prev_len, const FusionWindows& w) {
    const int n = std::min(w.f_v_len, std::max(prev_len, 0));
    return {prev_len - n, prev_len};
}

LatentClip select_video_context(const LatentClip& v_prev, const FusionWindows& w) {
    if (v_prev.empty()) fail(ErrorCode::InvalidArgument, "previous video clip is empty");
    Span s = video_context_span(v_prev.length(), w);
    return LatentClip(v_prev.latents.middleRows(s.begin, s.length()));
}

int aligned_token_index(int latent_index, const FusionWindows& w) {
    // Integer form of floor(i * fpl / fps * 1000 / ms).
    const long long num = static_cast<long long>(latent_index) * w.frames_per_latent * 1000;
    const long long den = static_cast<long long>(w.fps) * w.ms_per_token;
    return static_cast<int>(num / den);
}

Span audio_window_span(int latent_index, int latent_count, int audio_len, const FusionWindows& w) {
    if (latent_index < 0 || latent_index >= latent_count)
        fail(ErrorCode::IndexOutOfRange, "latent index " + std::to_string(latent_index) + " outside [0, " +
                                             std::to_string(latent_count) + ")");
    if (audio_len <= 0) fail(ErrorCode::InvalidArgument, "audio clip is empty");
    const int p = aligned_token_index(latent_index, w);
    if (p < audio_len) return {p, std::min(p + w.f_a_len, audio_len)};
    return {audio_len - std::min(w.f_a_len, audio_len), audio_len};
}

AudioClip align_audio_window(int latent_index, int latent_count, const AudioClip& a_cur, const FusionWindows& w) {
    Span s = audio_window_span(latent_index, latent_count, a_cur.length(), w);
    AudioClip out(a_cur.codebooks(), s.length());
    for (int k = 0; k < a_cur.codebooks(); ++k)
        for (int t = s.begin; t < s.end; ++t) out.at(k, t - s.begin) = a_cur.at(k, t);
    return out;
}

AttentionMask audio_window_mask(int n_prev, int n_cur, int audio_len, const FusionWindows& w) {
    AttentionMask mask(n_prev + n_cur, audio_len);
    for (int i = 0; i < n_cur; ++i) {
        Span s = audio_window_span(i, n_cur, audio_len, w);
        for (int t = s.begin; t < s.end; ++t) mask.set(n_prev + i, t, true);
    }
    return mask;
}

ag::Var audio_fusion_step(const FusionLayer& layer, const ag::Var& speech, const ag::Var& a_prev,
                          const ag::Var& a_cur, const ag::Var& v_prev_sa, const AttentionMask& audio_mask,
                          const FusionWindows& w, int n_heads, bool use_video_context) {
    const auto d = a_cur.cols();
    if (speech.cols() != d || a_prev.cols() != d || (v_prev_sa.defined() && v_prev_sa.cols() != d))
        fail(ErrorCode::DimensionMismatch, "audio fusion inputs must share d_model");
    ag::Var x = ag::concat_rows({speech, a_prev, a_cur});
    if (audio_mask.queries() != x.rows()) fail(ErrorCode::DimensionMismatch, "audio mask does not match sequence");
    ag::Var h = nn::self_attention(layer.audio_sa, x, n_heads, &audio_mask);
    if (!use_video_context || !v_prev_sa.defined() || v_prev_sa.rows() == 0) return h;
    Span s = video_context_span(static_cast<int>(v_prev_sa.rows()), w);
    ag::Var ctx = ag::slice_rows(v_prev_sa, s.begin, s.length());
    return nn::cross_attention(layer.audio_ca, h, ctx, n_heads, nullptr);
}

ag::Var video_self_attention(const FusionLayer& layer, const ag::Var& v_prev, const ag::Var& v_cur,
                             const AttentionMask& video_mask, int n_heads) {
    if (v_prev.cols() != v_cur.cols()) fail(ErrorCode::DimensionMismatch, "video fusion inputs must share d_model");
    ag::Var x = v_prev.rows() > 0 ? ag::concat_rows({v_prev, v_cur}) : v_cur;
    if (video_mask.queries() != x.rows()) fail(ErrorCode::DimensionMismatch, "video mask does not match sequence");
    return nn::self_attention(layer.video_sa, x, n_heads, &video_mask);
}

ag::Var video_cross_fusion(const FusionLayer& layer, const ag::Var& h, int n_prev, const ag::Var& motion,
                           const ag::Var& a_feat, const FusionWindows& w, int n_heads, bool use_audio) {
    const auto d = h.cols();
    if ((motion.defined() && motion.rows() > 0 && motion.cols() != d) ||
        (a_feat.defined() && a_feat.rows() > 0 && a_feat.cols() != d))
        fail(ErrorCode::DimensionMismatch, "video fusion inputs must share d_model");
    ag::Var x = nn::cross_attention(layer.motion_ca, h, motion, n_heads, nullptr);
    if (!use_audio || !a_feat.defined() || a_feat.rows() == 0) return x;
    const int n_cur = static_cast<int>(h.rows()) - n_prev;
    AttentionMask mask = audio_window_mask(n_prev, n_cur, static_cast<int>(a_feat.rows()), w);
    return nn::cross_attention(layer.window_ca, x, a_feat, n_heads, &mask);
}

ag::Var video_fusion_step(const FusionLayer& layer, const ag::Var& v_prev, const ag::Var& v_cur,
                          const ag::Var& motion, const ag::Var& a_feat, const AttentionMask& video_mask,
                          const FusionWindows& w, int n_heads) {
    ag::Var h = video_self_attention(layer, v_prev, v_cur, video_mask, n_heads);
    return video_cross_fusion(layer, h, static_cast<int>(v_prev.rows()), motion, a_feat, w, n_heads);
}

}  // namespace mavid
