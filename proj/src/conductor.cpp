// Copyright (C) 2026 The mavid Authors
// SPDX-License-Identifier: Apache-2.0

#include "mavid/conductor.hpp"

#include <cmath>

namespace mavid {

using ag::Var;

namespace {

constexpr int kIntentSpeechBase = 32;
constexpr int kFamilyMarkBase = 12;
constexpr int kMotionBase = 24;
constexpr int kInstructionBase = 28;
constexpr int kTextIntentBase = 4;
constexpr int kTextFamilyBase = 16;
constexpr int kTextNoiseBase = 48;
constexpr int kKinds = 6;

int family_index(TaskFamily f) { return static_cast<int>(f); }

Vec pattern(uint64_t seed, int dim) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    Vec v(dim);
    for (int c = 0; c < dim; ++c) v(c) = n(rng);
    return v;
}

}  // namespace

const char* family_name(TaskFamily f) {
    switch (f) {
        case TaskFamily::qa: return "qa";
        case TaskFamily::dialogue: return "dialogue";
        case TaskFamily::instruction: return "instruction";
    }
    return "?";
}

DirectivePair conductor_target(int intent, TaskFamily family) {
    DirectivePair p;
    p.speech = {Token::text(kIntentSpeechBase + 2 * intent), Token::text(kIntentSpeechBase + 2 * intent + 1),
                Token::text(kFamilyMarkBase + family_index(family))};
    if (family == TaskFamily::dialogue) p.motion = {Token::text(kMotionBase + intent % 4)};
    if (family == TaskFamily::instruction)
        p.motion = {Token::text(kMotionBase + intent % 4), Token::text(kInstructionBase + intent % 4)};
    return p;
}

ConductorTask make_conductor_task(const ConductorTaskSpec& spec, const ModelConfig& c, int intent, TaskFamily family,
                                  unsigned modalities, std::mt19937_64& rng) {
    if (modalities == 0 || modalities > 7) fail(ErrorCode::InvalidArgument, "modality set must be a non-empty subset");
    if (intent < 0 || intent >= spec.intents || kIntentSpeechBase + 2 * spec.intents > c.text_vocab ||
        c.text_vocab <= kTextNoiseBase)
        fail(ErrorCode::InvalidConfig, "text vocabulary too small for the conductor tasks");
    if (audio_special::count + 4 * spec.intents > c.audio_vocab || 38 + 15 > c.audio_vocab)
        fail(ErrorCode::InvalidConfig, "audio vocabulary too small for the conductor tasks");
    ConductorTask task;
    task.intent = intent;
    task.family = family;
    task.target = conductor_target(intent, family);
    const int f = family_index(family);
    if (modalities & 1u) {
        std::uniform_int_distribution<int32_t> noise(kTextNoiseBase, c.text_vocab - 1);
        task.input.text = TokenList{Token::text(kTextIntentBase + intent), Token::text(kTextFamilyBase + f),
                                    Token::text(noise(rng))};
    }
    if (modalities & 2u) {
        AudioClip a(c.codebooks, spec.audio_len);
        std::uniform_int_distribution<int32_t> noise(audio_special::count, c.audio_vocab - 1);
        for (int t = 0; t < spec.audio_len; ++t) {
            a.at(0, t) = audio_special::count + 4 * intent + t % 4;
            if (c.codebooks > 1) a.at(1, t) = 38 + 5 * f + t % 5;
            for (int k = 2; k < c.codebooks; ++k) a.at(k, t) = noise(rng);
        }
        task.input.audio = std::move(a);
    }
    if (modalities & 4u) {
        std::normal_distribution<double> n(0.0, spec.video_noise);
        const Vec base = pattern(0x7100 + intent, c.latent_dim) + 0.5 * pattern(0x7200 + f, c.latent_dim);
        Mat v(spec.latent_len, c.latent_dim);
        for (int i = 0; i < spec.latent_len; ++i) {
            v.row(i) = base;
            for (int ch = 0; ch < c.latent_dim; ++ch) v(i, ch) += n(rng);
        }
        task.input.video = LatentClip(std::move(v));
    }
    return task;
}

std::vector<ConductorTask> make_conductor_tasks(const ConductorTaskSpec& spec, const ModelConfig& c, int count,
                                                uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> intent(0, spec.intents - 1);
    std::vector<ConductorTask> out;
    for (int i = 0; i < count; ++i) {
        TaskFamily f = u(rng) < spec.null_motion_ratio ? TaskFamily::qa
                                                       : (u(rng) < 0.5 ? TaskFamily::dialogue : TaskFamily::instruction);
        out.push_back(make_conductor_task(spec, c, intent(rng), f, static_cast<unsigned>(1 + i % 7), rng));
    }
    return out;
}

std::shared_ptr<ConductorParams> ConductorParams::create(const ModelConfig& config, int max_positions) {
    validate_config(config);
    auto p = std::make_shared<ConductorParams>();
    p->config = config;
    p->max_positions = max_positions;
    auto& ps = p->store;
    const int d = config.d_model;
    std::mt19937_64 rng(config.seed ^ 0xc0dull);
    p->text_embed = ps.normal("text_embed", config.text_vocab, d, 0.3, rng);
    for (int k = 0; k < config.codebooks; ++k)
        p->audio_embed.push_back(ps.normal("audio_embed." + std::to_string(k), config.audio_vocab, d, 0.3, rng));
    p->video_in = nn::Linear::make(ps, "video_in", config.latent_dim, d, 1.0 / std::sqrt(config.latent_dim), rng);
    p->kind_embed = ps.normal("kind_embed", kKinds, d, 0.1, rng);
    p->pos_embed = ps.normal("pos_embed", max_positions, d, 0.1, rng);
    for (int l = 0; l < config.n_layers; ++l) {
        const std::string pre = "layer." + std::to_string(l) + ".";
        p->layers.push_back({nn::AttentionBlock::make(ps, pre + "sa", d, config.n_layers, rng),
                             nn::Mlp::make(ps, pre + "mlp", d, 2 * d, config.n_layers, rng)});
    }
    p->out_ln = nn::LayerNorm::make(ps, "out_ln", d);
    p->head = nn::Linear::make(ps, "head", d, config.text_vocab, 0.02, rng);
    return p;
}

Var conductor_forward(const ConductorParams& p, const ConductorInput& input, const TokenList& directive_input) {
    if (input.empty()) fail(ErrorCode::InvalidArgument, "conductor needs at least one input modality");
    const auto& c = p.config;
    const int d = c.d_model;
    // A missing modality next to a present one becomes a zero-length clip, keeping clip counts equal.
    std::vector<AudioClip> audio;
    std::vector<LatentClip> video;
    if (input.audio || input.video) {
        audio.push_back(input.audio ? *input.audio : AudioClip(c.codebooks, 0));
        video.push_back(input.video ? *input.video : LatentClip(Mat(0, c.latent_dim)));
    }
    const int text_len = input.text ? static_cast<int>(input.text->size()) : 0;
    auto seq = build_conductor_sequence(text_len, audio, video, static_cast<int>(directive_input.size()));
    if (seq.total_len > p.max_positions) fail(ErrorCode::DecodeOverflow, "conductor sequence exceeds max positions");

    std::vector<Var> parts;
    for (const auto& s : seq.segments) {
        Var rows;
        switch (s.kind) {
            case SegmentKind::text: rows = ag::embedding(p.text_embed, token_ids(*input.text)); break;
            case SegmentKind::audio_clip: {
                const AudioClip& a = audio[0];
                if (a.length() == 0) continue;
                if (a.codebooks() != c.codebooks) fail(ErrorCode::DimensionMismatch, "conductor audio codebooks");
                for (int k = 0; k < a.codebooks(); ++k) {
                    std::vector<int32_t> ids(a.ids().begin() + static_cast<long>(k) * a.length(),
                                             a.ids().begin() + static_cast<long>(k + 1) * a.length());
                    Var e = ag::embedding(p.audio_embed[static_cast<size_t>(k)], ids);
                    rows = k == 0 ? e : ag::add(rows, e);
                }
                break;
            }
            case SegmentKind::video_clip:
                if (video[0].length() == 0) continue;
                if (video[0].channels() != c.latent_dim) fail(ErrorCode::DimensionMismatch, "conductor latent width");
                rows = p.video_in(ag::constant(video[0].latents));
                break;
            case SegmentKind::directive: rows = ag::embedding(p.text_embed, token_ids(directive_input)); break;
            default: fail(ErrorCode::InvalidArgument, "unexpected conductor segment");
        }
        if (s.length() == 0) continue;
        rows = ag::add_row(rows, ag::gather_rows(p.kind_embed, {static_cast<int>(s.kind)}));
        rows = ag::add(rows, ag::slice_rows(p.pos_embed, s.begin, s.length()));
        parts.push_back(rows);
    }
    Var x = ag::concat_rows(parts);
    auto mask = MaskCache::global().get(seq);
    for (const auto& layer : p.layers) {
        x = nn::self_attention(layer.sa, x, c.n_heads, mask.get());
        x = layer.mlp(x);
    }
    const int n = static_cast<int>(directive_input.size());
    (void)d;
    return p.head(p.out_ln(ag::slice_rows(x, seq.total_len - n, n)));
}

Var conductor_loss(const ConductorParams& p, const ConductorTask& task) {
    const TokenList wire = encode_directives(task.target).tokens;
    TokenList in{Token::text(text_special::clip_sep)};
    in.insert(in.end(), wire.begin(), wire.end() - 1);
    return ag::cross_entropy(conductor_forward(p, task.input, in), token_ids(wire));
}

DirectiveWire understand(const ConductorParams& p, const ConductorInput& input, const ConductorDecodeOptions& options) {
    ag::NoGradGuard guard;
    const auto& c = p.config;
    const int cap = options.max_len > 0 ? options.max_len : 2 * c.max_text_len + 2;
    std::mt19937_64 rng(options.seed);
    TokenList in{Token::text(text_special::clip_sep)};
    DirectiveWire wire;
    bool framed = false;
    while (static_cast<int>(wire.tokens.size()) < cap) {
        Mat logits = conductor_forward(p, input, in).value();
        Vec last = logits.row(logits.rows() - 1);
        const int32_t frame = framed ? text_special::m_eos : text_special::m_bos;
        for (int32_t id = 0; id < text_special::count; ++id)
            if (id != frame) last(id) = -std::numeric_limits<double>::infinity();
        int32_t next;
        if (options.temperature > 0.0) {
            const double top = last.maxCoeff();
            std::vector<double> w(static_cast<size_t>(last.size()));
            for (Eigen::Index i = 0; i < last.size(); ++i)
                w[static_cast<size_t>(i)] = std::exp((last(i) - top) / options.temperature);
            next = std::discrete_distribution<int32_t>(w.begin(), w.end())(rng);
        } else {
            Eigen::Index best;
            last.maxCoeff(&best);
            next = static_cast<int32_t>(best);
        }
        wire.tokens.push_back(Token::text(next));
        if (next == text_special::m_eos) return wire;
        framed = framed || next == text_special::m_bos;
        in.push_back(Token::text(next));
    }
    fail(ErrorCode::DecodeOverflow, "directive not terminated within " + std::to_string(cap) + " tokens");
}

double conductor_train_step(ConductorParams& p, Optimizer& opt, const std::vector<ConductorTask>& batch) {
    if (batch.empty()) fail(ErrorCode::InvalidArgument, "empty conductor batch");
    p.store.zero_grad();
    double total = 0.0;
    for (const auto& task : batch) {
        Var loss = conductor_loss(p, task);
        total += loss.scalar();
        ag::backward(loss);
    }
    opt.step(p.store, static_cast<int>(batch.size()));
    return total / static_cast<double>(batch.size());
}

}  // namespace mavid
