// Copyright (C) 2026 The mavid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include "mavid/creator.hpp"

namespace mavid {

struct GenerationOptions {
    int top_k = 0;            // 0: greedy audio decoding
    int diffusion_steps = 0;  // 0: use the config value
    bool use_history = true;  // false empties the state before every clip
    uint64_t seed = 0;
};

// Clip-recurrent state: at most one previous clip pair.
struct GenerationState {
    std::optional<AudioClip> a_prev;
    std::optional<LatentClip> v_prev;
    int clip_index = 0;
};

struct ClipOutput {
    AudioClip audio;
    LatentClip video;
    GenerationState next;
    uint64_t clip_seed = 0;
};

// Seed used for clip j of a run seeded with `seed`.
uint64_t clip_seed(uint64_t seed, int clip_index);

// Euler integration of dx/dt = velocity(x, t) from t = 0 to 1 in `steps`
// uniform steps. A reference row, when given, replaces row 0 before the first
// step and after every step.
Mat sample_diffusion(const std::function<Mat(const Mat&, double)>& velocity, Mat x0, int steps,
                     const Vec* ref_latent = nullptr);

// Delay-pattern audio decoding with the session's cache. Pad cells are forced
// to pad; content cells never take a reserved id.
AudioClip decode_audio(CreatorSession& session, const ModelConfig& config, int top_k, std::mt19937_64& rng);

ClipOutput generate_clip(const CreatorParams& params, const GenerationState& state, const DirectivePair& prompt,
                         const Vec* ref_latent, const GenerationOptions& options);

struct LongOutput {
    std::vector<DirectivePair> prompts;
    std::vector<AudioClip> audio;
    std::vector<LatentClip> video;
    std::vector<uint64_t> clip_seeds;
};

LongOutput generate_long(const CreatorParams& params, const std::vector<DirectivePair>& prompts, int n_clips,
                         const Vec* ref_latent, const GenerationOptions& options);

// Stream file: audio then latent record per clip. Manifest: one JSON line per clip.
void write_stream(std::ostream& os, const LongOutput& out);
void write_stream_manifest(std::ostream& os, const LongOutput& out, uint64_t seed);

}  // namespace mavid
