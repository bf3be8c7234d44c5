// Copyright (C) 2026 The mavid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "mavid/core_types.hpp"
#include "mavid/kv.hpp"
#include "mavid/optim.hpp"
#include "mavid/world.hpp"

namespace mavid {

inline constexpr int kConfigSchemaVersion = 1;

KeyValues model_config_to_kv(const ModelConfig& c);
ModelConfig model_config_from_kv(const KeyValues& kv);

enum class Stage { conductor, audio_ar, joint };
std::string stage_name(Stage s);
Stage parse_stage(const std::string& s);

// Everything a CLI run depends on. Serialized as flat "key = value" text.
struct RunConfig {
    ModelConfig model;
    WorldSpec world;
    OptimizerConfig optimizer;
    Stage stage = Stage::audio_ar;
    int steps = 500;
    int batch = 4;
    int save_every = 0;  // 0: only the final checkpoint
    int log_every = 1;
    int train_records = 64;
    int eval_records = 16;
    uint64_t data_seed = 7;
    uint64_t eval_seed = 99;
    bool history = true;  // ablation flag; fusion lives in model.fusion
    int ablate_seeds = 5;
    int ablate_ar_steps = 150;
    int ablate_joint_steps = 300;
    int top_k = 0;
    bool use_ref = true;  // inject the first latent of each record's first clip during evaluation
    std::string dataset_path;
    std::string checkpoint_dir = "checkpoints";
    std::string report_dir = "reports";

    KeyValues to_key_values() const;
    static RunConfig from_key_values(const KeyValues& kv);
    std::string to_text() const;
    static RunConfig from_text(const std::string& text);

    // Hash of the fields that must match when resuming (model, world, optimizer, data).
    uint64_t resume_hash() const;
    // Hash of the model fields only.
    uint64_t model_hash() const;
};

RunConfig load_run_config(const std::string& path);

}  // namespace mavid
