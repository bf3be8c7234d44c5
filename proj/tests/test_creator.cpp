#include "doctest.h"
#include "fixtures.hpp"

#include <cmath>

#include "mavid/creator.hpp"
#include "mavid/losses.hpp"

using namespace mavid;

namespace {

struct Case {
    ModelConfig config;
    std::shared_ptr<CreatorParams> params;
    ClipPairInput input;
};

Case make_case(uint64_t seed, bool history, bool fusion = true) {
    std::mt19937_64 rng(seed);
    Case c;
    c.config = fixtures::tiny_config();
    c.config.fusion = fusion;
    c.config.seed = seed;
    c.params = CreatorParams::create(c.config);
    const auto& cf = c.config;
    c.input.prompt.speech = fixtures::random_text(3, cf.text_vocab, rng);
    c.input.prompt.motion = fixtures::random_text(2, cf.text_vocab, rng);
    if (history) {
        c.input.a_prev = fixtures::random_audio(cf.codebooks, cf.audio_len, cf.audio_vocab, rng);
        c.input.v_prev = LatentClip(fixtures::random_mat(cf.latent_len, cf.latent_dim, rng));
        c.input.clip_index = 1;
    }
    c.input.a_cur = fixtures::random_audio(cf.codebooks, cf.audio_len, cf.audio_vocab, rng);
    c.input.v_cur = LatentClip(fixtures::random_mat(cf.latent_len, cf.latent_dim, rng));
    c.input.noise = fixtures::random_mat(cf.latent_len, cf.latent_dim, rng);
    c.input.t = 0.37;
    return c;
}

double max_abs(const Mat& a, const Mat& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("forward output shapes") {
    auto c = make_case(1, true);
    auto out = forward_clip_pair(*c.params, c.input);
    const int width = c.config.audio_len + c.config.codebooks - 1;
    REQUIRE(out.audio_logits.size() == static_cast<size_t>(c.config.codebooks));
    for (const auto& l : out.audio_logits) {
        CHECK(l.rows() == width);
        CHECK(l.cols() == c.config.audio_vocab);
    }
    CHECK(out.velocity.rows() == c.config.latent_len);
    CHECK(out.velocity.cols() == c.config.latent_dim);

    ForwardOptions audio_only;
    audio_only.audio_only = true;
    auto out2 = forward_clip_pair(*c.params, c.input, audio_only);
    CHECK_FALSE(out2.velocity.defined());
}

TEST_CASE("targets are -1 exactly on delay pad cells") {
    auto c = make_case(2, false);
    auto out = forward_clip_pair(*c.params, c.input);
    for (int k = 0; k < c.config.codebooks; ++k) {
        int content = 0;
        for (size_t col = 0; col < out.audio_targets[k].size(); ++col) {
            const bool inside = static_cast<int>(col) >= k && static_cast<int>(col) < k + c.config.audio_len;
            CHECK((out.audio_targets[k][col] >= 0) == inside);
            content += inside;
            if (inside) CHECK(out.audio_targets[k][col] == c.input.a_cur.at(k, static_cast<int>(col) - k));
        }
        CHECK(content == c.config.audio_len);
    }
}

TEST_CASE("audio logits are causal inside the current clip") {
    auto c = make_case(3, true);
    auto base = forward_clip_pair(*c.params, c.input);
    DelayGrid grid = apply_delay_pattern(c.input.a_cur);
    // Perturb the token in grid column 5 of codebook 0; positions 0..5 predict columns <= 5 and never read column 5.
    const int col = 5;
    auto pert = c.input;
    pert.a_cur.at(0, col) = pert.a_cur.at(0, col) == 5 ? 6 : 5;
    auto out = forward_clip_pair(*c.params, pert);
    for (int k = 0; k < c.config.codebooks; ++k) {
        Mat b = base.audio_logits[k].value(), p = out.audio_logits[k].value();
        CHECK(max_abs(b.topRows(col + 1), p.topRows(col + 1)) == 0.0);
        CHECK(max_abs(b.bottomRows(b.rows() - col - 1), p.bottomRows(b.rows() - col - 1)) > 0.0);
    }
    (void)grid;
}

TEST_CASE("cached session logits match the full forward") {
    for (bool history : {false, true}) {
        for (bool fusion : {true, false}) {
            auto c = make_case(4, history, fusion);
            auto out = forward_clip_pair(*c.params, c.input);
            CreatorSession s(*c.params, c.input.prompt, history ? &*c.input.a_prev : nullptr,
                             history ? &*c.input.v_prev : nullptr, c.input.clip_index);
            s.begin_audio();
            DelayGrid grid = apply_delay_pattern(c.input.a_cur);
            double worst = 0.0;
            for (int col = 0; col < grid.width; ++col) {
                for (int k = 0; k < c.config.codebooks; ++k)
                    worst = std::max(worst, (s.logits()[k] - out.audio_logits[k].value().row(col)).cwiseAbs().maxCoeff());
                std::vector<int32_t> column;
                for (int k = 0; k < c.config.codebooks; ++k) column.push_back(grid.at(k, col));
                s.push_column(column);
            }
            CHECK(worst < 1e-10);
            CHECK(s.decoded_columns() == grid.width);

            Mat x_t = flow_interpolate(c.input.noise, c.input.v_cur.latents, c.input.t);
            Mat v = s.velocity(c.input.a_cur, x_t, c.input.t);
            CHECK(max_abs(v, out.velocity.value()) < 1e-10);
        }
    }
}

TEST_CASE("history is ignored when use_history is false") {
    auto c = make_case(5, true);
    ForwardOptions no_hist;
    no_hist.use_history = false;
    auto a = forward_clip_pair(*c.params, c.input, no_hist);
    auto stripped = c.input;
    stripped.a_prev.reset();
    stripped.v_prev.reset();
    auto b = forward_clip_pair(*c.params, stripped);
    CHECK(max_abs(a.velocity.value(), b.velocity.value()) == 0.0);
    CHECK(max_abs(a.audio_logits[0].value(), b.audio_logits[0].value()) == 0.0);
}

TEST_CASE("creator loss decomposes into its components") {
    auto c = make_case(6, true);
    auto loss = creator_loss(*c.params, c.input);
    CHECK(loss.l_all.scalar() == doctest::Approx(loss.l_ar.scalar() + loss.l_diff.scalar()).epsilon(1e-12));
    auto out = forward_clip_pair(*c.params, c.input);
    double nll = 0.0;
    int n = 0;
    for (int k = 0; k < c.config.codebooks; ++k) {
        const Mat& l = out.audio_logits[k].value();
        for (int r = 0; r < l.rows(); ++r) {
            const int32_t t = out.audio_targets[k][r];
            if (t < 0) continue;
            const double m = l.row(r).maxCoeff();
            nll += m + std::log((l.row(r).array() - m).exp().sum()) - l(r, t);
            ++n;
        }
    }
    CHECK(loss.l_ar.scalar() == doctest::Approx(nll / n).epsilon(1e-12));
    CHECK(loss.l_diff.scalar() ==
          doctest::Approx(diffusion_velocity_loss(c.input.noise, c.input.v_cur.latents, c.input.t, out.velocity.value()))
              .epsilon(1e-12));
}

TEST_CASE("initial audio logits are close to uniform") {
    ModelConfig cfg;
    auto p = CreatorParams::create(cfg);
    std::mt19937_64 rng(9);
    ClipPairInput in;
    in.a_cur = fixtures::random_audio(cfg.codebooks, cfg.audio_len, cfg.audio_vocab, rng);
    in.v_cur = LatentClip(fixtures::random_mat(cfg.latent_len, cfg.latent_dim, rng));
    in.noise = fixtures::random_mat(cfg.latent_len, cfg.latent_dim, rng);
    auto loss = creator_loss(*p, in);
    CHECK(std::abs(loss.l_ar.scalar() - std::log(cfg.audio_vocab)) < 0.1 * std::log(cfg.audio_vocab));
}

TEST_CASE("clone copies every parameter and stays independent") {
    auto c = make_case(7, false);
    auto copy = c.params->clone();
    REQUIRE(copy->store.entries().size() == c.params->store.entries().size());
    for (size_t i = 0; i < copy->store.entries().size(); ++i)
        CHECK(copy->store.entries()[i].second.value() == c.params->store.entries()[i].second.value());
    copy->store.entries()[0].second.node()->value(0, 0) += 1.0;
    CHECK(copy->store.entries()[0].second.value() != c.params->store.entries()[0].second.value());
}

TEST_CASE("timestep features") {
    Mat f = timestep_features(0.0);
    for (int i = 0; i < kTimeFeatures / 2; ++i) {
        CHECK(f(0, 2 * i) == 0.0);
        CHECK(f(0, 2 * i + 1) == 1.0);
    }
    Mat g = timestep_features(0.25);
    CHECK(g(0, 0) == doctest::Approx(std::sin(M_PI * 0.25)));
    CHECK(g(0, 3) == doctest::Approx(std::cos(2 * M_PI * 0.25)));
}
