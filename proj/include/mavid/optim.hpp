// Copyright (C) 2026 The mavid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "mavid/nn.hpp"

namespace mavid {

enum class OptimizerKind { sgd, adam };

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::sgd;
    double lr = 0.05;
    double momentum = 0.9;  // sgd only
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double clip_norm = 1.0;  // <= 0 disables clipping
};

std::string optimizer_name(OptimizerKind kind);
OptimizerKind parse_optimizer(const std::string& name);

// Applies accumulated gradients in parameter registration order.
class Optimizer {
public:
    Optimizer(const nn::ParamStore& store, OptimizerConfig config);

    // Scales gradients by 1 / batch, clips, updates and returns the pre-clip norm.
    double step(nn::ParamStore& store, int batch);

    const OptimizerConfig& config() const { return config_; }
    long long steps() const { return t_; }

    // State as named matrices, for checkpoints.
    std::vector<std::pair<std::string, Mat>> state() const;
    void load_state(const std::vector<std::pair<std::string, Mat>>& blobs, long long steps);

private:
    OptimizerConfig config_;
    std::vector<std::string> names_;
    std::vector<Mat> m_, v_;
    long long t_ = 0;
};

}  // namespace mavid
