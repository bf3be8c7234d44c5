// Copyright (C) 2026 The mavid Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "mavid/error.hpp"

namespace mavid {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::Matrix<double, 1, Eigen::Dynamic, Eigen::RowMajor>;

// Reserved ids sit at the bottom of every stream; content ids start right after.
namespace text_special {
inline constexpr int32_t pad = 0;
inline constexpr int32_t m_bos = 1;
inline constexpr int32_t m_eos = 2;
inline constexpr int32_t clip_sep = 3;
inline constexpr int32_t count = 4;
}  // namespace text_special

namespace audio_special {
inline constexpr int32_t pad = 0;
inline constexpr int32_t audio_bos = 1;
inline constexpr int32_t audio_eos = 2;
inline constexpr int32_t count = 3;
}  // namespace audio_special

enum class StreamKind : uint8_t { text, audio };

struct Stream {
    StreamKind kind = StreamKind::text;
    int codebook = 0;  // meaningful for audio only

    static constexpr Stream text() { return {StreamKind::text, 0}; }
    static constexpr Stream audio(int k) { return {StreamKind::audio, k}; }

    friend bool operator==(const Stream&, const Stream&) = default;
};

struct Token {
    Stream stream;
    int32_t id = 0;

    static constexpr Token text(int32_t id) { return {Stream::text(), id}; }

    bool is_special() const {
        return stream.kind == StreamKind::text ? id < text_special::count : id < audio_special::count;
    }

    friend bool operator==(const Token&, const Token&) = default;
};

using TokenList = std::vector<Token>;

std::vector<int32_t> token_ids(const TokenList& tokens);
TokenList text_tokens(const std::vector<int32_t>& ids);

// C codebooks x T time steps, row-major. Row k holds stream audio[k].
class AudioClip {
public:
    AudioClip() = default;
    AudioClip(int codebooks, int length, int32_t fill = audio_special::pad);
    AudioClip(int codebooks, int length, std::vector<int32_t> ids);

    int codebooks() const { return codebooks_; }
    int length() const { return length_; }
    bool empty() const { return length_ == 0; }

    int32_t at(int k, int t) const { return ids_[static_cast<size_t>(k) * length_ + t]; }
    int32_t& at(int k, int t) { return ids_[static_cast<size_t>(k) * length_ + t]; }
    Token token(int k, int t) const { return {Stream::audio(k), at(k, t)}; }

    const std::vector<int32_t>& ids() const { return ids_; }

    friend bool operator==(const AudioClip&, const AudioClip&) = default;

private:
    int codebooks_ = 0;
    int length_ = 0;
    std::vector<int32_t> ids_;
};

// L temporal latents x D channels.
struct LatentClip {
    Mat latents;

    LatentClip() = default;
    explicit LatentClip(Mat m) : latents(std::move(m)) {}
    LatentClip(int length, int channels) : latents(Mat::Zero(length, channels)) {}

    int length() const { return static_cast<int>(latents.rows()); }
    int channels() const { return static_cast<int>(latents.cols()); }
    bool empty() const { return latents.rows() == 0; }

    friend bool operator==(const LatentClip& a, const LatentClip& b) {
        return a.latents.rows() == b.latents.rows() && a.latents.cols() == b.latents.cols() &&
               a.latents == b.latents;
    }
};

// Decoupled directives. Framing specials are added only on the wire.
struct DirectivePair {
    TokenList speech;
    TokenList motion;

    friend bool operator==(const DirectivePair&, const DirectivePair&) = default;
};

struct ModelConfig {
    int d_model = 64;
    int n_heads = 4;
    int n_layers = 4;
    int codebooks = 3;
    int text_vocab = 64;
    int audio_vocab = 64;
    int audio_len = 48;    // T_a tokens per clip
    int latent_len = 12;   // L latents per clip
    int latent_dim = 4;    // D channels
    int frames_per_latent = 4;
    int ms_per_token = 10;
    int fps = 100;
    int f_v_window = 10;
    int f_a_window = 4;
    int diffusion_steps = 16;
    int max_text_len = 16;
    bool fusion = true;
    uint64_t seed = 1234;
};

// Returns the config unchanged when every constraint holds; throws InvalidConfig
// naming the first violated field otherwise.
const ModelConfig& validate_config(const ModelConfig& config);

void validate_clip(const AudioClip& clip, const ModelConfig& config);
void validate_clip(const LatentClip& clip);
void validate_directives(const DirectivePair& pair, const ModelConfig& config);

}  // namespace mavid
