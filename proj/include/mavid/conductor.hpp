// Copyright (C) 2026 The mavid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <optional>
#include <random>
#include <vector>

#include "mavid/directive.hpp"
#include "mavid/nn.hpp"
#include "mavid/optim.hpp"
#include "mavid/sequence.hpp"

namespace mavid {

enum class TaskFamily { qa, dialogue, instruction };
const char* family_name(TaskFamily f);

// Shapes of the synthetic understanding tasks.
struct ConductorTaskSpec {
    int intents = 8;
    int audio_len = 8;
    int latent_len = 4;
    double video_noise = 0.1;
    double null_motion_ratio = 0.5;  // share of qa tasks, whose motion directive is null
};

inline constexpr int kGreetIntent = 0;

struct ConductorInput {
    std::optional<TokenList> text;
    std::optional<AudioClip> audio;
    std::optional<LatentClip> video;

    bool empty() const { return !text && !audio && !video; }
};

struct ConductorTask {
    ConductorInput input;
    DirectivePair target;
    TaskFamily family = TaskFamily::dialogue;
    int intent = 0;
};

// Exact target for an (intent, family) pair. Qa targets carry no motion.
DirectivePair conductor_target(int intent, TaskFamily family);

// `modalities` is a bit set: 1 text, 2 audio, 4 video (must be non-zero).
ConductorTask make_conductor_task(const ConductorTaskSpec& spec, const ModelConfig& config, int intent,
                                  TaskFamily family, unsigned modalities, std::mt19937_64& rng);

// Cycles through all seven modality subsets; families drawn with the spec's null-motion share.
std::vector<ConductorTask> make_conductor_tasks(const ConductorTaskSpec& spec, const ModelConfig& config, int count,
                                                uint64_t seed);

struct ConductorLayer {
    nn::AttentionBlock sa;
    nn::Mlp mlp;
};

struct ConductorParams {
    ModelConfig config;
    int max_positions = 0;
    nn::ParamStore store;

    ag::Var text_embed;                // E_T
    std::vector<ag::Var> audio_embed;  // E_A, one table per codebook
    nn::Linear video_in;               // E_V
    ag::Var kind_embed, pos_embed;
    std::vector<ConductorLayer> layers;
    nn::LayerNorm out_ln;
    nn::Linear head;

    static std::shared_ptr<ConductorParams> create(const ModelConfig& config, int max_positions = 96);
};

// Stub-encoded condition rows plus the directive rows for `directive_input`.
// Returns logits for the directive rows only.
ag::Var conductor_forward(const ConductorParams& p, const ConductorInput& input, const TokenList& directive_input);

// Mean next-token cross-entropy over the wire of the target directive.
ag::Var conductor_loss(const ConductorParams& p, const ConductorTask& task);

struct ConductorDecodeOptions {
    int max_len = 0;           // 0: 2 * max_text_len + 2
    double temperature = 0.0;  // 0: greedy
    uint64_t seed = 0;
};

// Grammar-constrained decoding: speech ids or m_bos, then motion ids or m_eos,
// stop at m_eos. Raises DecodeOverflow at the length cap.
DirectiveWire understand(const ConductorParams& p, const ConductorInput& input,
                         const ConductorDecodeOptions& options = {});

// One optimizer step over `batch`; returns the mean loss before the update.
double conductor_train_step(ConductorParams& p, Optimizer& opt, const std::vector<ConductorTask>& batch);

}  // namespace mavid
