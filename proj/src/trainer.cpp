// Copyright (C) 2026 The mavid Authors
// SPDX-License-Identifier: Apache-2.0

#include "mavid/trainer.hpp"

#include <sstream>

#include <json.hpp>

namespace mavid {

namespace {

ClipPairInput sample_with(const WorldRecord& record, int j, bool history, double t, Mat noise) {
    ClipPairInput in;
    in.prompt = record.prompts[static_cast<size_t>(j)];
    if (history && j > 0) {
        in.a_prev = record.audio[static_cast<size_t>(j - 1)];
        in.v_prev = record.video[static_cast<size_t>(j - 1)];
    }
    in.a_cur = record.audio[static_cast<size_t>(j)];
    in.v_cur = record.video[static_cast<size_t>(j)];
    in.noise = std::move(noise);
    in.t = t;
    in.clip_index = j;
    return in;
}

Mat normal_mat(int rows, int cols, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Mat m(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) m(r, c) = n(rng);
    return m;
}

}  // namespace

ClipPairInput make_clip_sample(const WorldRecord& record, int j, bool history, std::mt19937_64& rng) {
    if (j < 0 || j >= static_cast<int>(record.audio.size())) fail(ErrorCode::IndexOutOfRange, "clip index");
    const LatentClip& v = record.video[static_cast<size_t>(j)];
    double t = 1.0 - std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    Mat noise = normal_mat(v.length(), v.channels(), rng);
    return sample_with(record, j, history, t, std::move(noise));
}

std::vector<ClipPairInput> make_eval_set(const std::vector<WorldRecord>& records, uint64_t seed, bool history) {
    std::mt19937_64 rng(seed);
    std::vector<ClipPairInput> out;
    for (const auto& r : records)
        for (int j = 0; j < static_cast<int>(r.audio.size()); ++j) out.push_back(make_clip_sample(r, j, history, rng));
    return out;
}

LossValues evaluate_losses(const CreatorParams& params, const std::vector<ClipPairInput>& set,
                           const ForwardOptions& options) {
    if (set.empty()) fail(ErrorCode::InvalidArgument, "empty evaluation set");
    ag::NoGradGuard guard;
    ForwardOptions o = options;
    o.audio_only = false;
    LossValues v;
    for (const auto& in : set) {
        CreatorLoss l = creator_loss(params, in, o);
        v.l_ar += l.l_ar.scalar();
        v.l_diff += l.l_diff.scalar();
    }
    v.l_ar /= static_cast<double>(set.size());
    v.l_diff /= static_cast<double>(set.size());
    v.l_all = v.l_ar + v.l_diff;
    return v;
}

std::string metrics_json(const StepMetrics& m) {
    nlohmann::json j;
    j["step"] = m.step;
    j["stage"] = m.stage;
    j["l_ar"] = m.l_ar;
    j["l_diff"] = m.l_diff;
    j["l_all"] = m.l_all;
    j["grad_norm"] = m.grad_norm;
    j["lr"] = m.lr;
    return j.dump();
}

CreatorTrainer::CreatorTrainer(std::shared_ptr<CreatorParams> params, const RunConfig& config,
                               std::vector<WorldRecord> records)
    : params_(std::move(params)),
      config_(config),
      records_(std::move(records)),
      opt_(params_->store, config.optimizer),
      rng_(config.data_seed ^ 0x7e57ull) {
    if (records_.empty()) fail(ErrorCode::InvalidArgument, "no training records");
    if (config.stage == Stage::conductor) fail(ErrorCode::InvalidArgument, "creator trainer needs a creator stage");
    if (config.batch < 1) fail(ErrorCode::InvalidConfig, "batch must be >= 1");
}

ForwardOptions CreatorTrainer::forward_options() const {
    ForwardOptions o;
    o.audio_only = config_.stage == Stage::audio_ar;
    o.use_history = config_.history;
    return o;
}

StepMetrics CreatorTrainer::step() {
    const ForwardOptions o = forward_options();
    params_->store.zero_grad();
    StepMetrics m;
    std::uniform_int_distribution<size_t> pick(0, records_.size() - 1);
    for (int b = 0; b < config_.batch; ++b) {
        const WorldRecord& r = records_[pick(rng_)];
        const int j = std::uniform_int_distribution<int>(0, static_cast<int>(r.audio.size()) - 1)(rng_);
        CreatorLoss l = creator_loss(*params_, make_clip_sample(r, j, config_.history, rng_), o);
        m.l_ar += l.l_ar.scalar();
        m.l_diff += l.l_diff.scalar();
        m.l_all += l.l_all.scalar();
        ag::backward(l.l_all);
    }
    m.l_ar /= config_.batch;
    m.l_diff /= config_.batch;
    m.l_all /= config_.batch;
    m.grad_norm = opt_.step(params_->store, config_.batch);
    m.step = opt_.steps();
    m.stage = stage_name(config_.stage);
    m.lr = config_.optimizer.lr;
    return m;
}

std::string CreatorTrainer::rng_state() const {
    std::ostringstream os;
    os << rng_;
    return os.str();
}

void CreatorTrainer::set_rng_state(const std::string& state) {
    std::istringstream is(state);
    is >> rng_;
    if (!is) fail(ErrorCode::FormatError, "bad trainer rng state");
}

}  // namespace mavid
