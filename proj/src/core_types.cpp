// Copyright (C) 2026 The mavid Authors
// SPDX-License-Identifier: Apache-2.0

#include "mavid/core_types.hpp"

#include <cmath>

namespace mavid {

std::vector<int32_t> token_ids(const TokenList& tokens) {
    std::vector<int32_t> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(t.id);
    return out;
}

TokenList text_tokens(const std::vector<int32_t>& ids) {
    TokenList out;
    out.reserve(ids.size());
    for (auto id : ids) out.push_back(Token::text(id));
    return out;
}

AudioClip::AudioClip(int codebooks, int length, int32_t fill)
    : codebooks_(codebooks), length_(length), ids_(static_cast<size_t>(codebooks) * length, fill) {
    if (codebooks < 0 || length < 0) fail(ErrorCode::ShapeMismatch, "negative audio clip shape");
}

AudioClip::AudioClip(int codebooks, int length, std::vector<int32_t> ids)
    : codebooks_(codebooks), length_(length), ids_(std::move(ids)) {
    if (codebooks < 0 || length < 0 || ids_.size() != static_cast<size_t>(codebooks) * length)
        fail(ErrorCode::ShapeMismatch, "audio clip payload does not match its shape");
}

namespace {

void require_positive(int value, const char* field) {
    if (value <= 0) fail(ErrorCode::InvalidConfig, std::string(field) + " must be positive");
}

}  // namespace

const ModelConfig& validate_config(const ModelConfig& c) {
    require_positive(c.d_model, "d_model");
    require_positive(c.n_heads, "n_heads");
    if (c.d_model % c.n_heads != 0) fail(ErrorCode::InvalidConfig, "d_model not divisible by n_heads");
    require_positive(c.n_layers, "n_layers");
    require_positive(c.codebooks, "codebooks");
    if (c.text_vocab <= text_special::count)
        fail(ErrorCode::InvalidConfig, "text_vocab must exceed the reserved special ids");
    if (c.audio_vocab <= audio_special::count)
        fail(ErrorCode::InvalidConfig, "audio_vocab must exceed the reserved special ids");
    require_positive(c.audio_len, "audio_len");
    require_positive(c.latent_len, "latent_len");
    require_positive(c.latent_dim, "latent_dim");
    require_positive(c.frames_per_latent, "frames_per_latent");
    require_positive(c.ms_per_token, "ms_per_token");
    require_positive(c.fps, "fps");
    require_positive(c.f_v_window, "f_v_window");
    require_positive(c.f_a_window, "f_a_window");
    require_positive(c.diffusion_steps, "diffusion_steps");
    require_positive(c.max_text_len, "max_text_len");
    return c;
}

void validate_clip(const AudioClip& clip, const ModelConfig& config) {
    if (clip.length() <= 0) fail(ErrorCode::ShapeMismatch, "audio clip must have T_a > 0");
    if (clip.codebooks() != config.codebooks)
        fail(ErrorCode::ShapeMismatch, "audio clip codebook count differs from config");
    for (auto id : clip.ids())
        if (id < 0 || id >= config.audio_vocab) fail(ErrorCode::IndexOutOfRange, "audio token id out of vocabulary");
}

void validate_clip(const LatentClip& clip) {
    if (clip.length() <= 0 || clip.channels() <= 0) fail(ErrorCode::ShapeMismatch, "latent clip must be non-empty");
    if (!clip.latents.allFinite()) fail(ErrorCode::InvalidArgument, "latent clip has non-finite entries");
}

void validate_directives(const DirectivePair& pair, const ModelConfig& config) {
    auto check = [&](const TokenList& list) {
        for (const auto& t : list) {
            if (t.stream.kind != StreamKind::text) fail(ErrorCode::InvalidArgument, "directive token not in text stream");
            if (t.id < text_special::count || t.id >= config.text_vocab)
                fail(ErrorCode::InvalidArgument, "directive token must be a text content id");
        }
    };
    check(pair.speech);
    check(pair.motion);
}

}  // namespace mavid
