// Copyright (C) 2026 The mavid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mavid/conductor.hpp"
#include "mavid/config.hpp"
#include "mavid/generation.hpp"
#include "mavid/trainer.hpp"

namespace mavid {

using Json = nlohmann::ordered_json;

inline constexpr const char* kReportSchema = "mavid.report/1";

std::string checkpoint_path(const RunConfig& config, Stage stage);

// Training records from path.dataset when set, otherwise generated from data.seed.
std::vector<WorldRecord> training_records(const RunConfig& config);
std::vector<WorldRecord> heldout_records(const RunConfig& config);

struct TrainOptions {
    bool resume = false;
    std::ostream* log = nullptr;  // progress lines, optional
};

struct TrainSummary {
    Stage stage = Stage::audio_ar;
    long long first_step = 0;
    long long final_step = 0;
    LossValues initial;  // held-out, before the first step of this run
    LossValues final;
    std::string checkpoint;
};

// Runs one stage. Appends per-step metrics to <reports>/metrics.jsonl and
// saves <checkpoints>/<stage>.ckpt every save interval and at the end.
TrainSummary run_train(const RunConfig& config, const TrainOptions& options = {});

std::shared_ptr<CreatorParams> load_creator(const std::string& path);
std::shared_ptr<ConductorParams> load_conductor(const std::string& path);

// One prompt per non-empty line, in the directive text dump format. Errors name the line.
std::vector<DirectivePair> parse_prompts(const std::string& text, const ModelConfig& config);

struct GenerateRequest {
    std::string checkpoint;
    std::string prompts_path;
    int n_clips = 0;  // 0: one clip per prompt line
    uint64_t seed = 0;
    std::string ref_path;  // optional whitespace-separated latent row
    std::string out_dir = ".";
    bool use_history = true;
};

// Writes <out>/stream.bin and <out>/stream.jsonl.
LongOutput run_generate(const RunConfig& config, const GenerateRequest& request);

struct EvalSettings {
    bool use_history = true;
    bool use_ref = true;
    int top_k = 0;
};

Json evaluate_model(const CreatorParams& params, const WorldSpec& world, const std::vector<WorldRecord>& records,
                    uint64_t eval_seed, const EvalSettings& settings);

// Loads a creator checkpoint and evaluates it on path.dataset or the held-out records.
Json run_eval(const RunConfig& config, const std::string& checkpoint, const std::string& dataset = "");

// Paired fusion-on/off training and history on/off generation over ablate.seeds seeds.
Json run_ablate(const RunConfig& config, std::ostream* log = nullptr);

std::string report_table(const Json& report);

// Writes <dir>/<name>.json and <dir>/<name>.txt and appends the report to <dir>/reports.jsonl.
void write_report(const std::string& dir, const std::string& name, const Json& report);

}  // namespace mavid
