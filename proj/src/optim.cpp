// Copyright (C) 2026 The mavid Authors
// SPDX-License-Identifier: Apache-2.0

#include "mavid/optim.hpp"

#include <cmath>

namespace mavid {

std::string optimizer_name(OptimizerKind kind) { return kind == OptimizerKind::adam ? "adam" : "sgd"; }

OptimizerKind parse_optimizer(const std::string& name) {
    if (name == "sgd") return OptimizerKind::sgd;
    if (name == "adam") return OptimizerKind::adam;
    fail(ErrorCode::InvalidConfig, "unknown optimizer '" + name + "'");
}

Optimizer::Optimizer(const nn::ParamStore& store, OptimizerConfig config) : config_(config) {
    if (!(config_.lr > 0.0)) fail(ErrorCode::InvalidConfig, "learning rate must be positive");
    for (const auto& [name, var] : store.entries()) {
        names_.push_back(name);
        m_.push_back(Mat::Zero(var.rows(), var.cols()));
        v_.push_back(config_.kind == OptimizerKind::adam ? Mat::Zero(var.rows(), var.cols()) : Mat());
    }
}

double Optimizer::step(nn::ParamStore& store, int batch) {
    auto& entries = store.entries();
    if (entries.size() != m_.size()) fail(ErrorCode::InvalidArgument, "parameter set changed under the optimizer");
    const double inv = 1.0 / std::max(1, batch);
    double sq = 0.0;
    for (const auto& [name, var] : entries) sq += var.grad().squaredNorm();
    const double norm = std::sqrt(sq) * inv;
    double scale = inv;
    if (config_.clip_norm > 0.0 && norm > config_.clip_norm) scale *= config_.clip_norm / norm;
    ++t_;
    for (size_t i = 0; i < entries.size(); ++i) {
        ag::Var p = entries[i].second;
        Mat g = p.grad() * scale;
        Mat& w = p.mutable_value();
        if (config_.kind == OptimizerKind::sgd) {
            m_[i] = config_.momentum * m_[i] + g;
            w -= config_.lr * m_[i];
        } else {
            m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * g;
            v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * g.cwiseProduct(g);
            const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
            const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
            w.array() -= config_.lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + config_.eps);
        }
    }
    return norm;
}

std::vector<std::pair<std::string, Mat>> Optimizer::state() const {
    std::vector<std::pair<std::string, Mat>> out;
    for (size_t i = 0; i < names_.size(); ++i) {
        out.emplace_back("opt.m." + names_[i], m_[i]);
        if (config_.kind == OptimizerKind::adam) out.emplace_back("opt.v." + names_[i], v_[i]);
    }
    return out;
}

void Optimizer::load_state(const std::vector<std::pair<std::string, Mat>>& blobs, long long steps) {
    auto find = [&](const std::string& name) -> const Mat* {
        for (const auto& [n, m] : blobs)
            if (n == name) return &m;
        return nullptr;
    };
    for (size_t i = 0; i < names_.size(); ++i) {
        const Mat* m = find("opt.m." + names_[i]);
        if (!m || m->rows() != m_[i].rows() || m->cols() != m_[i].cols())
            fail(ErrorCode::FormatError, "missing optimizer state for " + names_[i]);
        m_[i] = *m;
        if (config_.kind == OptimizerKind::adam) {
            const Mat* v = find("opt.v." + names_[i]);
            if (!v || v->rows() != v_[i].rows() || v->cols() != v_[i].cols())
                fail(ErrorCode::FormatError, "missing optimizer state for " + names_[i]);
            v_[i] = *v;
        }
    }
    t_ = steps;
}

}  // namespace mavid
