// Copyright (C) 2026 The mavid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "mavid/conductor.hpp"
#include "mavid/config.hpp"
#include "mavid/creator.hpp"
#include "mavid/optim.hpp"
#include "mavid/world.hpp"

namespace mavid {

// Clip j of a record as a training pair, with t ~ U(0, 1] and x0 ~ N(0, I).
// History is attached when j > 0 and `history` is set.
ClipPairInput make_clip_sample(const WorldRecord& record, int j, bool history, std::mt19937_64& rng);

// Every clip of every record, with t and noise fixed by `seed`.
std::vector<ClipPairInput> make_eval_set(const std::vector<WorldRecord>& records, uint64_t seed, bool history);

struct LossValues {
    double l_ar = 0.0;
    double l_diff = 0.0;
    double l_all = 0.0;
};

LossValues evaluate_losses(const CreatorParams& params, const std::vector<ClipPairInput>& set,
                           const ForwardOptions& options);

struct StepMetrics {
    long long step = 0;
    std::string stage;
    double l_ar = 0.0;
    double l_diff = 0.0;
    double l_all = 0.0;
    double grad_norm = 0.0;
    double lr = 0.0;
};

std::string metrics_json(const StepMetrics& m);

// Single-writer creator training over a fixed record set.
class CreatorTrainer {
public:
    CreatorTrainer(std::shared_ptr<CreatorParams> params, const RunConfig& config, std::vector<WorldRecord> records);

    StepMetrics step();

    CreatorParams& params() { return *params_; }
    Optimizer& optimizer() { return opt_; }
    ForwardOptions forward_options() const;
    std::string rng_state() const;
    void set_rng_state(const std::string& state);

private:
    std::shared_ptr<CreatorParams> params_;
    RunConfig config_;
    std::vector<WorldRecord> records_;
    Optimizer opt_;
    std::mt19937_64 rng_;
};

}  // namespace mavid
