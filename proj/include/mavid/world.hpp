// Copyright (C) 2026 The mavid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "mavid/core_types.hpp"
#include "mavid/fusion.hpp"
#include "mavid/kv.hpp"

namespace mavid {

// Synthetic audio/video world with a known coupling.
//
// Audio codebook 0 follows a per-family Markov chain over the family's token
// set S_f = {3 + 8f + r : r < 8}. Higher codebooks are a fixed function of the
// codebook-0 token and the record's identity. Each latent is
//   x_n = mu_identity + b_motion + trend * n + g(window_n) + sigma * eps,
// where n counts latents across the whole record and g averages the class
// drift vectors over the latent's aligned audio window.
struct WorldSpec {
    int coupling_rule = 1;  // 1: token-class drift
    int families = 4;
    int identities = 4;
    int motions = 3;
    int classes = 4;
    int n_clips = 4;
    double sigma = 0.05;
    double drift_scale = 2.0;
    double identity_scale = 1.0;
    double motion_scale = 0.5;
    double trend = 0.05;
    double tau = 0.2;
    double markov_stay = 0.8;
    double family_switch = 0.5;
    double null_motion_ratio = 0.5;

    // Shapes and rates shared with the model.
    int codebooks = 3;
    int audio_vocab = 64;
    int text_vocab = 64;
    int audio_len = 48;
    int latent_len = 12;
    int latent_dim = 4;
    FusionWindows windows;

    static WorldSpec from_config(const ModelConfig& config);
    void validate() const;

    KeyValues to_key_values() const;
    static WorldSpec from_key_values(const KeyValues& kv);

    int family_token(int family, int r) const { return audio_special::count + 8 * family + r; }
    int token_class(int32_t id) const { return (id - audio_special::count) % classes; }
    Vec drift(int cls) const;
    Vec identity_mean(int identity) const;
    Vec motion_bias(int motion) const;  // zero for motion < 0
    DirectivePair prompt(int family, int motion) const;
};

struct WorldRecord {
    uint64_t seed = 0;
    int identity = 0;
    int motion = -1;  // -1: null motion directive
    std::vector<int> families;
    std::vector<DirectivePair> prompts;
    std::vector<AudioClip> audio;
    std::vector<LatentClip> video;

    friend bool operator==(const WorldRecord&, const WorldRecord&) = default;
};

WorldRecord gen_record(const WorldSpec& spec, uint64_t seed);

// Mean drift over each latent's aligned audio window, one row per latent.
Mat coupling_signal(const WorldSpec& spec, const AudioClip& audio, int latent_count);

// Fraction of latents (after the first) whose increment matches the rule's
// predicted increment within tau in every channel.
double oracle_consistency(const std::vector<AudioClip>& audio, const std::vector<LatentClip>& video,
                          const WorldSpec& spec);

// Mean squared jump across clip boundaries minus the mean squared intra-clip
// step, floored at zero.
double boundary_discontinuity(const std::vector<LatentClip>& video);

// Family whose token set holds the largest share of codebook-0 tokens.
int classify_family(const AudioClip& clip, const WorldSpec& spec);

// Dataset file: "MVDS" | u32 version | spec text | u32 count | records.
// The manifest holds one JSON line per record with its seed and labels.
uint64_t record_seed(uint64_t dataset_seed, int index);
std::vector<WorldRecord> gen_dataset(const WorldSpec& spec, uint64_t dataset_seed, int count);
void write_dataset(std::ostream& os, const WorldSpec& spec, const std::vector<WorldRecord>& records);
void write_manifest(std::ostream& os, const std::vector<WorldRecord>& records);
std::pair<WorldSpec, std::vector<WorldRecord>> read_dataset(std::istream& is);

}  // namespace mavid
