// Copyright (C) 2026 The mavid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <optional>
#include <random>
#include <vector>

#include "mavid/core_types.hpp"
#include "mavid/delay.hpp"
#include "mavid/fusion.hpp"
#include "mavid/nn.hpp"
#include "mavid/sequence.hpp"

namespace mavid {

struct CreatorLayer {
    FusionLayer fusion;
    nn::Mlp audio_mlp;
    nn::Mlp video_mlp;
};

// Trainable weights of the hybrid decoder. Var handles alias the store, so
// instances are held by pointer and duplicated only through clone().
struct CreatorParams {
    ModelConfig config;
    nn::ParamStore store;

    ag::Var text_embed, text_pos, speech_role, motion_role;
    std::vector<ag::Var> audio_embed;  // one table per codebook
    ag::Var audio_pos, audio_role;     // role row 0: history clip, row 1: current clip
    nn::Linear video_in;
    ag::Var video_pos, video_role;
    nn::Linear time_proj;
    std::vector<CreatorLayer> layers;
    nn::LayerNorm audio_out_ln;
    std::vector<nn::Linear> audio_heads;
    nn::LayerNorm video_out_ln;
    nn::Linear velocity_head;

    static std::shared_ptr<CreatorParams> create(const ModelConfig& config);
    std::shared_ptr<CreatorParams> clone() const;
};

inline constexpr int kTimeFeatures = 16;
Mat timestep_features(double t);

// One training example: the clip pair (j-1, j) with clean history and a noised current video.
struct ClipPairInput {
    DirectivePair prompt;
    std::optional<AudioClip> a_prev;
    std::optional<LatentClip> v_prev;
    AudioClip a_cur;
    LatentClip v_cur;  // clean target x1
    Mat noise;         // x0, same shape as v_cur
    double t = 0.5;
    int clip_index = 0;
};

struct ForwardOptions {
    bool audio_only = false;   // stage two: AR audio path alone
    bool use_history = true;   // false drops (a_prev, v_prev) even when present
};

struct ClipPairOutput {
    std::vector<ag::Var> audio_logits;            // per codebook, (T_a + C - 1) x audio_vocab
    std::vector<std::vector<int32_t>> audio_targets;  // per codebook, -1 on pad cells
    ag::Var velocity;                             // L x D, undefined when audio_only
};

ClipPairOutput forward_clip_pair(const CreatorParams& params, const ClipPairInput& input,
                                 const ForwardOptions& options = {});

struct CreatorLoss {
    ag::Var l_ar;
    ag::Var l_diff;
    ag::Var l_all;
};

CreatorLoss creator_loss(const CreatorParams& params, const ClipPairInput& input, const ForwardOptions& options = {});

// Incremental inference over one parameter snapshot. Not thread-safe per
// instance; independent instances over the same params may run concurrently.
class CreatorSession {
public:
    CreatorSession(const CreatorParams& params, const DirectivePair& prompt, const AudioClip* a_prev,
                   const LatentClip* v_prev, int clip_index);

    // Audio decoding with a per-layer key/value cache. Call begin_audio() once,
    // then alternate logits() / push_column().
    void begin_audio();
    const std::vector<Vec>& logits() const { return logits_; }
    void push_column(const std::vector<int32_t>& column);
    int decoded_columns() const { return columns_; }

    // Velocity field for the current clip given its decoded audio.
    Mat velocity(const AudioClip& a_cur, const Mat& x_t, double t) const;

private:
    void step(const Vec& input);

    const CreatorParams& p_;
    DirectivePair prompt_;
    std::optional<AudioClip> a_prev_;
    std::optional<LatentClip> v_prev_;
    int clip_index_;
    int n_heads_;
    FusionWindows windows_;

    std::vector<Mat> video_ctx_;  // per layer F_v context (already windowed)
    std::vector<Mat> k_cache_, v_cache_;
    std::vector<Vec> logits_;
    int columns_ = 0;
};

}  // namespace mavid
