// Copyright (C) 2026 The mavid Authors
// SPDX-License-Identifier: Apache-2.0

#include "mavid/creator.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <shared_mutex>

#include "mavid/losses.hpp"

namespace mavid {

using ag::Var;

std::shared_ptr<CreatorParams> CreatorParams::create(const ModelConfig& config) {
    validate_config(config);
    auto p = std::make_shared<CreatorParams>();
    p->config = config;
    auto& ps = p->store;
    const int d = config.d_model;
    std::mt19937_64 rng(config.seed);

    p->text_embed = ps.normal("text_embed", config.text_vocab, d, 0.3, rng);
    p->text_pos = ps.normal("text_pos", config.max_text_len, d, 0.1, rng);
    p->speech_role = ps.normal("speech_role", 1, d, 0.1, rng);
    p->motion_role = ps.normal("motion_role", 1, d, 0.1, rng);
    for (int k = 0; k < config.codebooks; ++k)
        p->audio_embed.push_back(ps.normal("audio_embed." + std::to_string(k), config.audio_vocab, d, 0.3, rng));
    p->audio_pos = ps.normal("audio_pos", creator_audio_positions(config.codebooks, config.audio_len), d, 0.1, rng);
    p->audio_role = ps.normal("audio_role", 2, d, 0.1, rng);
    p->video_in = nn::Linear::make(ps, "video_in", config.latent_dim, d, 1.0 / std::sqrt(config.latent_dim), rng);
    p->video_pos = ps.normal("video_pos", config.latent_len, d, 0.1, rng);
    p->video_role = ps.normal("video_role", 2, d, 0.1, rng);
    p->time_proj = nn::Linear::make(ps, "time_proj", kTimeFeatures, d, 1.0 / std::sqrt(kTimeFeatures), rng);

    for (int l = 0; l < config.n_layers; ++l) {
        const std::string pre = "layer." + std::to_string(l) + ".";
        CreatorLayer layer;
        layer.fusion.audio_sa = nn::AttentionBlock::make(ps, pre + "audio_sa", d, config.n_layers, rng);
        layer.fusion.audio_ca = nn::AttentionBlock::make(ps, pre + "audio_ca", d, config.n_layers, rng, true);
        layer.fusion.video_sa = nn::AttentionBlock::make(ps, pre + "video_sa", d, config.n_layers, rng);
        layer.fusion.motion_ca = nn::AttentionBlock::make(ps, pre + "motion_ca", d, config.n_layers, rng, true);
        layer.fusion.window_ca = nn::AttentionBlock::make(ps, pre + "window_ca", d, config.n_layers, rng, true);
        layer.audio_mlp = nn::Mlp::make(ps, pre + "audio_mlp", d, 2 * d, config.n_layers, rng);
        layer.video_mlp = nn::Mlp::make(ps, pre + "video_mlp", d, 2 * d, config.n_layers, rng);
        p->layers.push_back(std::move(layer));
    }
    p->audio_out_ln = nn::LayerNorm::make(ps, "audio_out_ln", d);
    for (int k = 0; k < config.codebooks; ++k)
        p->audio_heads.push_back(
            nn::Linear::make(ps, "audio_head." + std::to_string(k), d, config.audio_vocab, 0.02, rng));
    p->video_out_ln = nn::LayerNorm::make(ps, "video_out_ln", d);
    p->velocity_head = nn::Linear::make(ps, "velocity_head", d, config.latent_dim, 0.02, rng);
    return p;
}

std::shared_ptr<CreatorParams> CreatorParams::clone() const {
    auto copy = create(config);
    const auto& src = store.entries();
    const auto& dst = copy->store.entries();
    for (size_t i = 0; i < src.size(); ++i) {
        Var v = dst[i].second;
        v.mutable_value() = src[i].second.value();
    }
    return copy;
}

Mat timestep_features(double t) {
    Mat f(1, kTimeFeatures);
    for (int i = 0; i < kTimeFeatures / 2; ++i) {
        const double w = std::numbers::pi * std::ldexp(1.0, i);
        f(0, 2 * i) = std::sin(w * t);
        f(0, 2 * i + 1) = std::cos(w * t);
    }
    return f;
}

namespace {

Var empty_rows(int d) { return ag::constant(Mat(0, d)); }

Var role_row(const Var& table, int row) { return ag::gather_rows(table, {row}); }

Var text_rows(const CreatorParams& p, const TokenList& tokens, const Var& role) {
    const int d = p.config.d_model;
    if (tokens.empty()) return empty_rows(d);
    if (static_cast<int>(tokens.size()) > p.config.max_text_len)
        fail(ErrorCode::InvalidArgument, "directive longer than max_text_len");
    Var x = ag::embedding(p.text_embed, token_ids(tokens));
    x = ag::add(x, ag::slice_rows(p.text_pos, 0, static_cast<Eigen::Index>(tokens.size())));
    return ag::add_row(x, role);
}

// Column c of the input is audio_bos for c == 0 and delay-grid column c - 1 otherwise.
std::vector<std::vector<int32_t>> audio_input_ids(const AudioClip& clip) {
    DelayGrid g = apply_delay_pattern(clip);
    std::vector<std::vector<int32_t>> ids(static_cast<size_t>(clip.codebooks()));
    for (int k = 0; k < clip.codebooks(); ++k) {
        auto& row = ids[static_cast<size_t>(k)];
        row.reserve(static_cast<size_t>(g.width) + 1);
        row.push_back(audio_special::audio_bos);
        for (int c = 0; c < g.width; ++c) row.push_back(g.at(k, c));
    }
    return ids;
}

Var audio_rows(const CreatorParams& p, const AudioClip& clip, int role) {
    if (clip.codebooks() != p.config.codebooks || clip.length() != p.config.audio_len)
        fail(ErrorCode::DimensionMismatch, "audio clip shape differs from config");
    auto ids = audio_input_ids(clip);
    Var x = ag::embedding(p.audio_embed[0], ids[0]);
    for (int k = 1; k < clip.codebooks(); ++k) x = ag::add(x, ag::embedding(p.audio_embed[k], ids[k]));
    x = ag::add(x, ag::slice_rows(p.audio_pos, 0, x.rows()));
    return ag::add_row(x, role_row(p.audio_role, role));
}

Var audio_features(const CreatorParams& p, const AudioClip& clip) {
    Var x = ag::embedding(p.audio_embed[0], [&] {
        std::vector<int32_t> r(clip.ids().begin(), clip.ids().begin() + clip.length());
        return r;
    }());
    for (int k = 1; k < clip.codebooks(); ++k) {
        std::vector<int32_t> r(clip.ids().begin() + static_cast<long>(k) * clip.length(),
                               clip.ids().begin() + static_cast<long>(k + 1) * clip.length());
        x = ag::add(x, ag::embedding(p.audio_embed[k], r));
    }
    return x;
}

Var video_rows(const CreatorParams& p, const Mat& latents, int role, std::optional<double> t) {
    if (latents.rows() != p.config.latent_len || latents.cols() != p.config.latent_dim)
        fail(ErrorCode::DimensionMismatch, "latent clip shape differs from config");
    Var x = p.video_in(ag::constant(latents));
    x = ag::add(x, p.video_pos);
    x = ag::add_row(x, role_row(p.video_role, role));
    if (t) x = ag::add_row(x, p.time_proj(ag::constant(timestep_features(*t))));
    return x;
}

struct StreamMasks {
    std::shared_ptr<const AttentionMask> audio;
    std::shared_ptr<const AttentionMask> video;
};

class StreamMaskCache {
public:
    StreamMasks get(const SegmentedSequence& seq, bool video_history) {
        const std::string key = seq.shape_key() + (video_history ? "#vh" : "#v");
        {
            std::shared_lock lock(mutex_);
            if (auto it = cache_.find(key); it != cache_.end()) return it->second;
        }
        auto full = MaskCache::global().get(seq);
        std::vector<int> audio_idx, video_idx;
        int last_video = -1;
        for (const auto& s : seq.segments)
            if (s.kind == SegmentKind::video_clip) last_video = std::max(last_video, s.clip_index);
        for (const auto& s : seq.segments) {
            for (int i = s.begin; i < s.end; ++i) {
                if (s.kind == SegmentKind::speech_text || s.kind == SegmentKind::audio_clip) audio_idx.push_back(i);
                if (s.kind == SegmentKind::video_clip && (video_history || s.clip_index == last_video))
                    video_idx.push_back(i);
            }
        }
        StreamMasks m{std::make_shared<const AttentionMask>(full->select(audio_idx, audio_idx)),
                      std::make_shared<const AttentionMask>(full->select(video_idx, video_idx))};
        std::unique_lock lock(mutex_);
        return cache_.emplace(key, m).first->second;
    }

    static StreamMaskCache& global() {
        static StreamMaskCache c;
        return c;
    }

private:
    std::shared_mutex mutex_;
    std::map<std::string, StreamMasks> cache_;
};

StreamMasks stream_masks(const CreatorParams& p, const DirectivePair& prompt, bool history, bool video_history,
                         int clip_index) {
    if (history && clip_index < 1) fail(ErrorCode::InvalidArgument, "history requires clip_index >= 1");
    const auto& c = p.config;
    AudioClip a(c.codebooks, c.audio_len);
    LatentClip v(c.latent_len, c.latent_dim);
    std::vector<AudioClip> as(history ? 2 : 1, a);
    std::vector<LatentClip> vs(history ? 2 : 1, v);
    auto seq = build_creator_sequence(prompt, as, vs, history ? clip_index - 1 : clip_index);
    return StreamMaskCache::global().get(seq, video_history);
}

}  // namespace

ClipPairOutput forward_clip_pair(const CreatorParams& p, const ClipPairInput& in, const ForwardOptions& opt) {
    const auto& c = p.config;
    const int d = c.d_model;
    const bool history = opt.use_history && in.a_prev.has_value() && in.v_prev.has_value();
    const bool video_active = !opt.audio_only;
    const bool fusion = c.fusion;
    const bool video_history = history && fusion;
    const FusionWindows w = FusionWindows::from_config(c);

    if (in.v_cur.latents.rows() != in.noise.rows() || in.v_cur.latents.cols() != in.noise.cols())
        fail(ErrorCode::DimensionMismatch, "noise shape differs from the video clip");

    StreamMasks masks = stream_masks(p, in.prompt, history, video_history, in.clip_index);

    Var speech = text_rows(p, in.prompt.speech, p.speech_role);
    Var motion = text_rows(p, in.prompt.motion, p.motion_role);
    Var a_prev = history ? audio_rows(p, *in.a_prev, 0) : empty_rows(d);
    Var a_cur = audio_rows(p, in.a_cur, 1);
    const auto n_s = speech.rows(), n_ap = a_prev.rows(), n_ac = a_cur.rows();
    Var xa = ag::concat_rows({speech, a_prev, a_cur});

    Var xv, a_feat;
    Eigen::Index n_vp = 0;
    const Eigen::Index n_vc = c.latent_len;
    if (video_active) {
        Mat x_t = flow_interpolate(in.noise, in.v_cur.latents, in.t);
        Var v_prev = video_history ? video_rows(p, in.v_prev->latents, 0, std::nullopt) : empty_rows(d);
        n_vp = v_prev.rows();
        xv = ag::concat_rows({v_prev, video_rows(p, x_t, 1, in.t)});
        a_feat = audio_features(p, in.a_cur);
    }

    for (const auto& layer : p.layers) {
        Var hv, vctx;
        if (video_active) {
            hv = video_self_attention(layer.fusion, ag::slice_rows(xv, 0, n_vp), ag::slice_rows(xv, n_vp, n_vc),
                                      *masks.video, c.n_heads);
            if (fusion && n_vp > 0) vctx = ag::slice_rows(hv, 0, n_vp);
        }
        xa = audio_fusion_step(layer.fusion, ag::slice_rows(xa, 0, n_s), ag::slice_rows(xa, n_s, n_ap),
                               ag::slice_rows(xa, n_s + n_ap, n_ac), vctx, *masks.audio, w, c.n_heads,
                               fusion && vctx.defined());
        xa = layer.audio_mlp(xa);
        if (video_active) {
            xv = video_cross_fusion(layer.fusion, hv, static_cast<int>(n_vp), motion, a_feat, w, c.n_heads, fusion);
            xv = layer.video_mlp(xv);
        }
    }

    ClipPairOutput out;
    const int width = c.audio_len + c.codebooks - 1;
    Var h = p.audio_out_ln(ag::slice_rows(xa, n_s + n_ap, width));
    DelayGrid grid = apply_delay_pattern(in.a_cur);
    for (int k = 0; k < c.codebooks; ++k) {
        out.audio_logits.push_back(p.audio_heads[k](h));
        std::vector<int32_t> targets(static_cast<size_t>(width), -1);
        for (int col = 0; col < width; ++col)
            if (grid.is_content(k, col)) targets[static_cast<size_t>(col)] = grid.at(k, col);
        out.audio_targets.push_back(std::move(targets));
    }
    if (video_active) out.velocity = p.velocity_head(p.video_out_ln(ag::slice_rows(xv, n_vp, n_vc)));
    return out;
}

CreatorLoss creator_loss(const CreatorParams& p, const ClipPairInput& in, const ForwardOptions& opt) {
    ClipPairOutput out = forward_clip_pair(p, in, opt);
    std::vector<int32_t> targets;
    for (const auto& t : out.audio_targets) targets.insert(targets.end(), t.begin(), t.end());
    CreatorLoss loss;
    loss.l_ar = ag::cross_entropy(ag::concat_rows(out.audio_logits), targets);
    if (out.velocity.defined()) {
        loss.l_diff = ag::mse(out.velocity, ag::constant(in.v_cur.latents - in.noise));
    } else {
        loss.l_diff = ag::constant(Mat::Zero(1, 1));
    }
    loss.l_all = ag::sum({loss.l_ar, loss.l_diff});
    return loss;
}

CreatorSession::CreatorSession(const CreatorParams& params, const DirectivePair& prompt, const AudioClip* a_prev,
                               const LatentClip* v_prev, int clip_index)
    : p_(params),
      prompt_(prompt),
      clip_index_(clip_index),
      n_heads_(params.config.n_heads),
      windows_(FusionWindows::from_config(params.config)) {
    if ((a_prev == nullptr) != (v_prev == nullptr))
        fail(ErrorCode::InvalidArgument, "history needs both the audio and the video clip");
    if (a_prev) {
        a_prev_ = *a_prev;
        v_prev_ = *v_prev;
    }
    if (!v_prev_ || !p_.config.fusion) return;

    // The previous clip's rows never attend to the current clip, so its video
    // path can be run alone to obtain each layer's F_v context.
    ag::NoGradGuard guard;
    const int d = p_.config.d_model;
    Var motion = text_rows(p_, prompt_.motion, p_.motion_role);
    Var xv = video_rows(p_, v_prev_->latents, 0, std::nullopt);
    AttentionMask full(p_.config.latent_len, p_.config.latent_len, true);
    for (const auto& layer : p_.layers) {
        Var hv = video_self_attention(layer.fusion, empty_rows(d), xv, full, n_heads_);
        Span s = video_context_span(static_cast<int>(hv.rows()), windows_);
        video_ctx_.push_back(hv.value().middleRows(s.begin, s.length()));
        xv = video_cross_fusion(layer.fusion, hv, static_cast<int>(hv.rows()), motion, Var(), windows_, n_heads_, false);
        xv = layer.video_mlp(xv);
    }
}

void CreatorSession::begin_audio() {
    ag::NoGradGuard guard;
    const auto& c = p_.config;
    const int d = c.d_model;
    const bool history = a_prev_.has_value();
    StreamMasks masks = stream_masks(p_, prompt_, history, history && c.fusion, clip_index_);

    Var speech = text_rows(p_, prompt_.speech, p_.speech_role);
    Var a_prev = history ? audio_rows(p_, *a_prev_, 0) : empty_rows(d);
    const auto n_s = speech.rows(), n_ap = a_prev.rows();
    const int n_prefix = static_cast<int>(n_s + n_ap);
    std::vector<int> idx(static_cast<size_t>(n_prefix));
    for (int i = 0; i < n_prefix; ++i) idx[static_cast<size_t>(i)] = i;
    AttentionMask prefix_mask = masks.audio->select(idx, idx);

    k_cache_.assign(p_.layers.size(), Mat(0, d));
    v_cache_.assign(p_.layers.size(), Mat(0, d));
    logits_.clear();
    columns_ = 0;

    if (n_prefix > 0) {
        Var xa = ag::concat_rows({speech, a_prev});
        for (size_t l = 0; l < p_.layers.size(); ++l) {
            const auto& layer = p_.layers[l];
            Var h = layer.fusion.audio_sa.ln_q(xa);
            k_cache_[l] = ag::matmul(h, layer.fusion.audio_sa.wk).value();
            v_cache_[l] = ag::matmul(h, layer.fusion.audio_sa.wv).value();
            Var ctx = video_ctx_.empty() ? Var() : ag::constant(video_ctx_[l]);
            // Passing the full context as v_prev_sa is fine: its length is already <= f_v_len.
            xa = audio_fusion_step(layer.fusion, ag::slice_rows(xa, 0, n_s), ag::slice_rows(xa, n_s, n_ap),
                                   empty_rows(d), ctx, prefix_mask, windows_, n_heads_, ctx.defined());
            xa = layer.audio_mlp(xa);
        }
    }

    Vec bos = Vec::Zero(d);
    for (int k = 0; k < c.codebooks; ++k) bos += p_.audio_embed[k].value().row(audio_special::audio_bos);
    bos += p_.audio_pos.value().row(0) + p_.audio_role.value().row(1);
    step(bos);
}

void CreatorSession::push_column(const std::vector<int32_t>& column) {
    const auto& c = p_.config;
    const int width = c.audio_len + c.codebooks - 1;
    if (static_cast<int>(column.size()) != c.codebooks) fail(ErrorCode::DimensionMismatch, "column needs C ids");
    if (columns_ >= width) fail(ErrorCode::IndexOutOfRange, "clip already fully decoded");
    ++columns_;
    if (columns_ == width) return;
    Vec x = p_.audio_pos.value().row(columns_) + p_.audio_role.value().row(1);
    for (int k = 0; k < c.codebooks; ++k) {
        if (column[static_cast<size_t>(k)] < 0 || column[static_cast<size_t>(k)] >= c.audio_vocab)
            fail(ErrorCode::IndexOutOfRange, "audio id out of vocabulary");
        x += p_.audio_embed[k].value().row(column[static_cast<size_t>(k)]);
    }
    step(x);
}

void CreatorSession::step(const Vec& input) {
    ag::NoGradGuard guard;
    const auto& c = p_.config;
    Var x = ag::constant(Mat(input));
    for (size_t l = 0; l < p_.layers.size(); ++l) {
        const auto& layer = p_.layers[l];
        const auto& sa = layer.fusion.audio_sa;
        Var h = sa.ln_q(x);
        Mat& kc = k_cache_[l];
        Mat& vc = v_cache_[l];
        kc.conservativeResize(kc.rows() + 1, Eigen::NoChange);
        vc.conservativeResize(vc.rows() + 1, Eigen::NoChange);
        kc.row(kc.rows() - 1) = ag::matmul(h, sa.wk).value();
        vc.row(vc.rows() - 1) = ag::matmul(h, sa.wv).value();
        Var att = ag::attention(ag::matmul(h, sa.wq), ag::constant(kc), ag::constant(vc), n_heads_, nullptr);
        x = ag::add(x, ag::matmul(att, sa.wo));
        if (!video_ctx_.empty()) x = nn::cross_attention(layer.fusion.audio_ca, x, ag::constant(video_ctx_[l]), n_heads_, nullptr);
        x = layer.audio_mlp(x);
    }
    Var h = p_.audio_out_ln(x);
    logits_.clear();
    for (int k = 0; k < c.codebooks; ++k) logits_.push_back(p_.audio_heads[k](h).value());
}

Mat CreatorSession::velocity(const AudioClip& a_cur, const Mat& x_t, double t) const {
    ag::NoGradGuard guard;
    const auto& c = p_.config;
    const int d = c.d_model;
    const bool video_history = v_prev_.has_value() && c.fusion;
    StreamMasks masks = stream_masks(p_, prompt_, v_prev_.has_value(), video_history, clip_index_);
    Var motion = text_rows(p_, prompt_.motion, p_.motion_role);
    Var v_prev = video_history ? video_rows(p_, v_prev_->latents, 0, std::nullopt) : empty_rows(d);
    const auto n_vp = v_prev.rows();
    Var xv = ag::concat_rows({v_prev, video_rows(p_, x_t, 1, t)});
    Var a_feat = audio_features(p_, a_cur);
    for (const auto& layer : p_.layers) {
        Var hv = video_self_attention(layer.fusion, ag::slice_rows(xv, 0, n_vp), ag::slice_rows(xv, n_vp, c.latent_len),
                                      *masks.video, n_heads_);
        xv = video_cross_fusion(layer.fusion, hv, static_cast<int>(n_vp), motion, a_feat, windows_, n_heads_, c.fusion);
        xv = layer.video_mlp(xv);
    }
    return p_.velocity_head(p_.video_out_ln(ag::slice_rows(xv, n_vp, c.latent_len))).value();
}

}  // namespace mavid
