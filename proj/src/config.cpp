// Copyright (C) 2026 The mavid Authors
// SPDX-License-Identifier: Apache-2.0

#include "mavid/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "mavid/binary_io.hpp"

namespace mavid {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

KeyValues with_prefix(const KeyValues& kv, const std::string& prefix) {
    KeyValues out;
    for (const auto& [k, v] : kv)
        if (k.rfind(prefix, 0) == 0) out.emplace(k, v);
    return out;
}

}  // namespace

KeyValues model_config_to_kv(const ModelConfig& c) {
    return {{"model.d_model", std::to_string(c.d_model)},
            {"model.n_heads", std::to_string(c.n_heads)},
            {"model.n_layers", std::to_string(c.n_layers)},
            {"model.codebooks", std::to_string(c.codebooks)},
            {"model.text_vocab", std::to_string(c.text_vocab)},
            {"model.audio_vocab", std::to_string(c.audio_vocab)},
            {"model.audio_len", std::to_string(c.audio_len)},
            {"model.latent_len", std::to_string(c.latent_len)},
            {"model.latent_dim", std::to_string(c.latent_dim)},
            {"model.frames_per_latent", std::to_string(c.frames_per_latent)},
            {"model.ms_per_token", std::to_string(c.ms_per_token)},
            {"model.fps", std::to_string(c.fps)},
            {"model.f_v_window", std::to_string(c.f_v_window)},
            {"model.f_a_window", std::to_string(c.f_a_window)},
            {"model.diffusion_steps", std::to_string(c.diffusion_steps)},
            {"model.max_text_len", std::to_string(c.max_text_len)},
            {"model.fusion", c.fusion ? "true" : "false"},
            {"model.seed", std::to_string(c.seed)}};
}

ModelConfig model_config_from_kv(const KeyValues& kv) {
    ModelConfig c;
    c.d_model = kv_int(kv, "model.d_model", c.d_model);
    c.n_heads = kv_int(kv, "model.n_heads", c.n_heads);
    c.n_layers = kv_int(kv, "model.n_layers", c.n_layers);
    c.codebooks = kv_int(kv, "model.codebooks", c.codebooks);
    c.text_vocab = kv_int(kv, "model.text_vocab", c.text_vocab);
    c.audio_vocab = kv_int(kv, "model.audio_vocab", c.audio_vocab);
    c.audio_len = kv_int(kv, "model.audio_len", c.audio_len);
    c.latent_len = kv_int(kv, "model.latent_len", c.latent_len);
    c.latent_dim = kv_int(kv, "model.latent_dim", c.latent_dim);
    c.frames_per_latent = kv_int(kv, "model.frames_per_latent", c.frames_per_latent);
    c.ms_per_token = kv_int(kv, "model.ms_per_token", c.ms_per_token);
    c.fps = kv_int(kv, "model.fps", c.fps);
    c.f_v_window = kv_int(kv, "model.f_v_window", c.f_v_window);
    c.f_a_window = kv_int(kv, "model.f_a_window", c.f_a_window);
    c.diffusion_steps = kv_int(kv, "model.diffusion_steps", c.diffusion_steps);
    c.max_text_len = kv_int(kv, "model.max_text_len", c.max_text_len);
    c.fusion = kv_bool(kv, "model.fusion", c.fusion);
    c.seed = kv_u64(kv, "model.seed", c.seed);
    return validate_config(c);
}

std::string stage_name(Stage s) {
    switch (s) {
        case Stage::conductor: return "conductor";
        case Stage::audio_ar: return "audio_ar";
        case Stage::joint: return "joint";
    }
    return "?";
}

Stage parse_stage(const std::string& s) {
    if (s == "conductor") return Stage::conductor;
    if (s == "audio_ar") return Stage::audio_ar;
    if (s == "joint") return Stage::joint;
    fail(ErrorCode::InvalidConfig, "unknown stage '" + s + "'");
}

KeyValues RunConfig::to_key_values() const {
    KeyValues kv = model_config_to_kv(model);
    for (auto& [k, v] : world.to_key_values()) kv[k] = v;
    kv["schema_version"] = std::to_string(kConfigSchemaVersion);
    kv["optim.kind"] = optimizer_name(optimizer.kind);
    kv["optim.lr"] = fmt(optimizer.lr);
    kv["optim.momentum"] = fmt(optimizer.momentum);
    kv["optim.beta1"] = fmt(optimizer.beta1);
    kv["optim.beta2"] = fmt(optimizer.beta2);
    kv["optim.eps"] = fmt(optimizer.eps);
    kv["optim.clip_norm"] = fmt(optimizer.clip_norm);
    kv["train.stage"] = stage_name(stage);
    kv["train.steps"] = std::to_string(steps);
    kv["train.batch"] = std::to_string(batch);
    kv["train.save_every"] = std::to_string(save_every);
    kv["train.log_every"] = std::to_string(log_every);
    kv["data.train_records"] = std::to_string(train_records);
    kv["data.eval_records"] = std::to_string(eval_records);
    kv["data.seed"] = std::to_string(data_seed);
    kv["data.eval_seed"] = std::to_string(eval_seed);
    kv["ablate.history"] = history ? "true" : "false";
    kv["ablate.seeds"] = std::to_string(ablate_seeds);
    kv["ablate.ar_steps"] = std::to_string(ablate_ar_steps);
    kv["ablate.joint_steps"] = std::to_string(ablate_joint_steps);
    kv["gen.top_k"] = std::to_string(top_k);
    kv["gen.ref"] = use_ref ? "true" : "false";
    kv["path.dataset"] = dataset_path;
    kv["path.checkpoints"] = checkpoint_dir;
    kv["path.reports"] = report_dir;
    return kv;
}

RunConfig RunConfig::from_key_values(const KeyValues& kv) {
    static const KeyValues known = RunConfig{}.to_key_values();
    for (const auto& [k, v] : kv)
        if (!known.count(k)) fail(ErrorCode::InvalidConfig, "unknown config key '" + k + "'");
    const int schema = kv_int(kv, "schema_version", kConfigSchemaVersion);
    if (schema != kConfigSchemaVersion)
        fail(ErrorCode::InvalidConfig, "unsupported schema_version " + std::to_string(schema));
    RunConfig r;
    r.model = model_config_from_kv(kv);
    WorldSpec w = WorldSpec::from_config(r.model);
    KeyValues world_kv = w.to_key_values();
    for (auto& [k, v] : with_prefix(kv, "world.")) world_kv[k] = v;
    r.world = WorldSpec::from_key_values(world_kv);
    r.world.validate();
    r.optimizer.kind = parse_optimizer(kv_string(kv, "optim.kind", optimizer_name(r.optimizer.kind)));
    r.optimizer.lr = kv_double(kv, "optim.lr", r.optimizer.lr);
    r.optimizer.momentum = kv_double(kv, "optim.momentum", r.optimizer.momentum);
    r.optimizer.beta1 = kv_double(kv, "optim.beta1", r.optimizer.beta1);
    r.optimizer.beta2 = kv_double(kv, "optim.beta2", r.optimizer.beta2);
    r.optimizer.eps = kv_double(kv, "optim.eps", r.optimizer.eps);
    r.optimizer.clip_norm = kv_double(kv, "optim.clip_norm", r.optimizer.clip_norm);
    r.stage = parse_stage(kv_string(kv, "train.stage", stage_name(r.stage)));
    r.steps = kv_int(kv, "train.steps", r.steps);
    r.batch = kv_int(kv, "train.batch", r.batch);
    r.save_every = kv_int(kv, "train.save_every", r.save_every);
    r.log_every = kv_int(kv, "train.log_every", r.log_every);
    r.train_records = kv_int(kv, "data.train_records", r.train_records);
    r.eval_records = kv_int(kv, "data.eval_records", r.eval_records);
    r.data_seed = kv_u64(kv, "data.seed", r.data_seed);
    r.eval_seed = kv_u64(kv, "data.eval_seed", r.eval_seed);
    r.history = kv_bool(kv, "ablate.history", r.history);
    r.ablate_seeds = kv_int(kv, "ablate.seeds", r.ablate_seeds);
    r.ablate_ar_steps = kv_int(kv, "ablate.ar_steps", r.ablate_ar_steps);
    r.ablate_joint_steps = kv_int(kv, "ablate.joint_steps", r.ablate_joint_steps);
    r.top_k = kv_int(kv, "gen.top_k", r.top_k);
    r.use_ref = kv_bool(kv, "gen.ref", r.use_ref);
    r.dataset_path = kv_string(kv, "path.dataset", r.dataset_path);
    r.checkpoint_dir = kv_string(kv, "path.checkpoints", r.checkpoint_dir);
    r.report_dir = kv_string(kv, "path.reports", r.report_dir);
    if (r.steps < 0 || r.batch < 1 || r.log_every < 1 || r.save_every < 0)
        fail(ErrorCode::InvalidConfig, "train.steps >= 0, train.batch >= 1, train.log_every >= 1 required");
    if (r.ablate_seeds < 1 || r.ablate_ar_steps < 0 || r.ablate_joint_steps < 0 || r.top_k < 0)
        fail(ErrorCode::InvalidConfig, "ablate.seeds >= 1, step counts and gen.top_k >= 0 required");
    if (r.train_records < 1 || r.eval_records < 1) fail(ErrorCode::InvalidConfig, "record counts must be positive");
    if (r.world.codebooks != r.model.codebooks || r.world.audio_len != r.model.audio_len ||
        r.world.latent_len != r.model.latent_len || r.world.latent_dim != r.model.latent_dim ||
        r.world.audio_vocab != r.model.audio_vocab || r.world.text_vocab != r.model.text_vocab)
        fail(ErrorCode::InvalidConfig, "world shapes must match the model shapes");
    return r;
}

std::string RunConfig::to_text() const {
    return "# mavid run config\n" + format_key_values(to_key_values());
}

RunConfig RunConfig::from_text(const std::string& text) { return from_key_values(parse_key_values(text)); }

uint64_t RunConfig::resume_hash() const {
    KeyValues kv = to_key_values();
    KeyValues keep;
    for (const auto& [k, v] : kv)
        if (k.rfind("model.", 0) == 0 || k.rfind("world.", 0) == 0 || k.rfind("optim.", 0) == 0 ||
            k.rfind("data.", 0) == 0 || k == "train.batch" || k == "ablate.history")
            keep.emplace(k, v);
    return io::fnv1a(format_key_values(keep));
}

uint64_t RunConfig::model_hash() const { return io::fnv1a(format_key_values(model_config_to_kv(model))); }

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, "cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return RunConfig::from_text(ss.str());
}

}  // namespace mavid
