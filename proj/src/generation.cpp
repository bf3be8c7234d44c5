// Copyright (C) 2026 The mavid Authors
// SPDX-License-Identifier: Apache-2.0

#include "mavid/generation.hpp"

#include <algorithm>
#include <numeric>

#include <json.hpp>

#include "mavid/binary_io.hpp"
#include "mavid/delay.hpp"
#include "mavid/directive.hpp"
#include "mavid/records.hpp"

namespace mavid {

uint64_t clip_seed(uint64_t seed, int clip_index) {
    uint64_t x = seed + 0x9e3779b97f4a7c15ull * static_cast<uint64_t>(clip_index + 1);
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

Mat sample_diffusion(const std::function<Mat(const Mat&, double)>& velocity, Mat x, int steps, const Vec* ref_latent) {
    if (steps < 1) fail(ErrorCode::InvalidArgument, "diffusion needs at least one step");
    if (ref_latent && ref_latent->cols() != x.cols()) fail(ErrorCode::DimensionMismatch, "reference latent width");
    const double dt = 1.0 / steps;
    if (ref_latent) x.row(0) = *ref_latent;
    for (int s = 0; s < steps; ++s) {
        x += dt * velocity(x, s * dt);
        if (ref_latent) x.row(0) = *ref_latent;
    }
    return x;
}

namespace {

int32_t pick(const Vec& logits, int top_k, std::mt19937_64& rng) {
    const int first = audio_special::count;
    const int n = static_cast<int>(logits.size()) - first;
    if (top_k <= 1) {
        Eigen::Index best;
        logits.tail(n).maxCoeff(&best);
        return static_cast<int32_t>(first + best);
    }
    std::vector<int> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    const int k = std::min(top_k, n);
    std::partial_sort(order.begin(), order.begin() + k, order.end(),
                      [&](int a, int b) { return logits(first + a) > logits(first + b); });
    std::vector<double> w(static_cast<size_t>(k));
    const double top = logits(first + order[0]);
    for (int i = 0; i < k; ++i) w[static_cast<size_t>(i)] = std::exp(logits(first + order[static_cast<size_t>(i)]) - top);
    std::discrete_distribution<int> dist(w.begin(), w.end());
    return static_cast<int32_t>(first + order[static_cast<size_t>(dist(rng))]);
}

}  // namespace

AudioClip decode_audio(CreatorSession& session, const ModelConfig& c, int top_k, std::mt19937_64& rng) {
    const int width = c.audio_len + c.codebooks - 1;
    DelayGrid grid{c.codebooks, width, std::vector<int32_t>(static_cast<size_t>(c.codebooks) * width, audio_special::pad)};
    session.begin_audio();
    std::vector<int32_t> column(static_cast<size_t>(c.codebooks));
    for (int col = 0; col < width; ++col) {
        for (int k = 0; k < c.codebooks; ++k) {
            const bool content = delay_cell_is_content(k, col, c.audio_len);
            column[static_cast<size_t>(k)] = content ? pick(session.logits()[static_cast<size_t>(k)], top_k, rng)
                                                     : audio_special::pad;
            grid.at(k, col) = column[static_cast<size_t>(k)];
        }
        session.push_column(column);
    }
    return remove_delay_pattern(grid, c.audio_len);
}

ClipOutput generate_clip(const CreatorParams& params, const GenerationState& state, const DirectivePair& prompt,
                         const Vec* ref_latent, const GenerationOptions& options) {
    const auto& c = params.config;
    if (ref_latent && state.clip_index > 0)
        fail(ErrorCode::RefOnLaterClip, "reference latent is only allowed on the first clip");
    validate_directives(prompt, c);

    ClipOutput out;
    out.clip_seed = clip_seed(options.seed, state.clip_index);
    std::mt19937_64 rng(out.clip_seed);
    const bool history = options.use_history && state.a_prev && state.v_prev;
    CreatorSession session(params, prompt, history ? &*state.a_prev : nullptr, history ? &*state.v_prev : nullptr,
                           state.clip_index);
    out.audio = decode_audio(session, c, options.top_k, rng);

    std::normal_distribution<double> n(0.0, 1.0);
    Mat x0(c.latent_len, c.latent_dim);
    for (Eigen::Index i = 0; i < x0.size(); ++i) x0.data()[i] = n(rng);
    const int steps = options.diffusion_steps > 0 ? options.diffusion_steps : c.diffusion_steps;
    out.video = LatentClip(sample_diffusion(
        [&](const Mat& x, double t) { return session.velocity(out.audio, x, t); }, std::move(x0), steps, ref_latent));

    out.next.a_prev = out.audio;
    out.next.v_prev = out.video;
    out.next.clip_index = state.clip_index + 1;
    return out;
}

LongOutput generate_long(const CreatorParams& params, const std::vector<DirectivePair>& prompts, int n_clips,
                         const Vec* ref_latent, const GenerationOptions& options) {
    if (n_clips < 1) fail(ErrorCode::InvalidArgument, "n_clips must be at least 1");
    if (static_cast<int>(prompts.size()) != n_clips)
        fail(ErrorCode::ClipCountMismatch, std::to_string(prompts.size()) + " prompts for " + std::to_string(n_clips) +
                                               " clips");
    LongOutput out;
    GenerationState state;
    for (int j = 0; j < n_clips; ++j) {
        if (!options.use_history) {
            state.a_prev.reset();
            state.v_prev.reset();
        }
        try {
            ClipOutput clip = generate_clip(params, state, prompts[static_cast<size_t>(j)], j == 0 ? ref_latent : nullptr,
                                            options);
            out.prompts.push_back(prompts[static_cast<size_t>(j)]);
            out.audio.push_back(clip.audio);
            out.video.push_back(clip.video);
            out.clip_seeds.push_back(clip.clip_seed);
            state = std::move(clip.next);
        } catch (const Error& e) {
            fail(e.code(), "clip " + std::to_string(j) + ": " + e.message());
        }
    }
    return out;
}

void write_stream(std::ostream& os, const LongOutput& out) {
    for (size_t j = 0; j < out.audio.size(); ++j) {
        write_record(os, out.audio[j]);
        write_record(os, out.video[j]);
    }
    if (!os) fail(ErrorCode::IoError, "stream write failed");
}

void write_stream_manifest(std::ostream& os, const LongOutput& out, uint64_t seed) {
    for (size_t j = 0; j < out.audio.size(); ++j) {
        const std::string wire = format_wire(encode_directives(out.prompts[j]).tokens);
        nlohmann::json line = {{"clip", j},
                               {"prompt", wire},
                               {"prompt_hash", io::fnv1a(wire)},
                               {"run_seed", seed},
                               {"seed", out.clip_seeds[j]},
                               {"codebooks", out.audio[j].codebooks()},
                               {"audio_len", out.audio[j].length()},
                               {"latent_len", out.video[j].length()},
                               {"latent_dim", out.video[j].channels()}};
        os << line.dump() << '\n';
    }
}

}  // namespace mavid
