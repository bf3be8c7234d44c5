#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"

#include <cmath>

#include "mavid/fusion.hpp"

using namespace mavid;
using ag::Var;

namespace {

struct Toy {
    nn::ParamStore ps;
    FusionLayer layer;
    explicit Toy(int d, uint64_t seed) {
        std::mt19937_64 rng(seed);
        layer.audio_sa = nn::AttentionBlock::make(ps, "asa", d, 1, rng);
        layer.audio_ca = nn::AttentionBlock::make(ps, "aca", d, 1, rng, true);
        layer.video_sa = nn::AttentionBlock::make(ps, "vsa", d, 1, rng);
        layer.motion_ca = nn::AttentionBlock::make(ps, "mca", d, 1, rng, true);
        layer.window_ca = nn::AttentionBlock::make(ps, "wca", d, 1, rng, true);
        // Random norms so the reference below exercises gain and bias.
        for (auto& [name, v] : ps.entries())
            if (name.find(".ln") != std::string::npos) v.node()->value += fixtures::random_mat(1, d, rng, 0.3);
    }
};

Var C(const Mat& m) { return ag::constant(m); }

AttentionMask causal(int n) {
    AttentionMask m(n, n);
    for (int q = 0; q < n; ++q)
        for (int k = 0; k <= q; ++k) m.set(q, k, true);
    return m;
}

// Reference pieces written with plain Eigen arithmetic.
Mat ref_ln(const Mat& x, const nn::LayerNorm& ln) {
    Mat out(x.rows(), x.cols());
    for (int r = 0; r < x.rows(); ++r) {
        const double mu = x.row(r).mean();
        const double var = (x.row(r).array() - mu).square().mean();
        out.row(r) = ((x.row(r).array() - mu) / std::sqrt(var + 1e-5)).matrix();
        out.row(r) = out.row(r).cwiseProduct(ln.gain.value()) + ln.bias.value();
    }
    return out;
}

Mat ref_attend(const nn::AttentionBlock& b, const Mat& x, const Mat& ctx, bool self, int heads,
               const std::function<bool(int, int)>& visible) {
    if (ctx.rows() == 0) return x;
    Mat hq = ref_ln(x, b.ln_q);
    Mat hk = self ? hq : ref_ln(ctx, b.ln_kv);
    Mat q = hq * b.wq.value(), k = hk * b.wk.value(), v = hk * b.wv.value();
    const int dh = static_cast<int>(x.cols()) / heads;
    Mat att = Mat::Zero(x.rows(), x.cols());
    for (int h = 0; h < heads; ++h)
        for (int r = 0; r < x.rows(); ++r) {
            double z = 0.0;
            for (int c = 0; c < k.rows(); ++c) {
                if (!visible(r, c)) continue;
                const double e = std::exp(q.row(r).segment(h * dh, dh).dot(k.row(c).segment(h * dh, dh)) / std::sqrt(dh));
                att.block(r, h * dh, 1, dh) += e * v.block(c, h * dh, 1, dh);
                z += e;
            }
            if (z > 0) att.block(r, h * dh, 1, dh) /= z;
        }
    return x + att * b.wo.value();
}

}  // namespace

TEST_CASE("window selectors") {
    FusionWindows w;
    CHECK(video_context_span(30, w) == Span{20, 30});
    CHECK(video_context_span(10, w) == Span{0, 10});
    CHECK(video_context_span(6, w) == Span{0, 6});
    LatentClip v(Mat::NullaryExpr(30, 2, [](Eigen::Index r, Eigen::Index c) { return double(r * 2 + c); }));
    LatentClip s = select_video_context(v, w);
    CHECK(s.length() == 10);
    CHECK(s.latents(0, 0) == 40.0);

    CHECK(audio_window_span(0, 12, 48, w) == Span{0, 4});
    FusionWindows slow = w;
    slow.fps = 20;
    CHECK(aligned_token_index(5, slow) == static_cast<int>(std::floor(5.0 * 4 / 20 * 1000 / 10)));
    CHECK(audio_window_span(5, 12, 200, slow) == Span{100, 104});
    CHECK_THROWS_AS(audio_window_span(12, 12, 48, w), Error);
    CHECK_THROWS_AS(audio_window_span(-1, 12, 48, w), Error);

    AudioClip a(2, 200);
    for (int t = 0; t < 200; ++t) a.at(0, t) = a.at(1, t) = 3 + t % 50;
    AudioClip win = align_audio_window(5, 12, a, slow);
    CHECK(win.length() == 4);
    CHECK(win.at(1, 0) == a.at(1, 100));

    FusionWindows bad = w;
    bad.f_a_len = 0;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("audio windows are clamped to the clip") {
    std::mt19937_64 rng(8);
    FusionWindows w;
    for (int trial = 0; trial < 50; ++trial) {
        std::uniform_int_distribution<int> latents(1, 20), len(1, 40);
        const int L = latents(rng), T = len(rng);
        for (int i = 0; i < L; ++i) {
            const long long p = static_cast<long long>(std::floor(i * 4.0 / 100.0 * 1000.0 / 10.0 + 1e-9));
            Span expect = p < T ? Span{static_cast<int>(p), static_cast<int>(std::min<long long>(p + 4, T))}
                                : Span{T - std::min(4, T), T};
            CHECK(audio_window_span(i, L, T, w) == expect);
            CHECK(expect.length() <= 4);
            CHECK(expect.length() >= 1);
        }
    }
}

TEST_CASE("video fusion step equals the unfused recomposition") {
    const int d = 8, heads = 2;
    Toy toy(d, 11);
    std::mt19937_64 rng(12);
    FusionWindows w;
    w.f_a_len = 4;
    Mat vp = fixtures::random_mat(2, d, rng), vc = fixtures::random_mat(2, d, rng), tm = fixtures::random_mat(3, d, rng),
        af = fixtures::random_mat(8, d, rng);
    AttentionMask vmask(4, 4, true);
    for (int q = 0; q < 2; ++q)
        for (int k = 2; k < 4; ++k) vmask.set(q, k, false);
    Mat got = video_fusion_step(toy.layer, C(vp), C(vc), C(tm), C(af), vmask, w, heads).value();

    Mat x(4, d);
    x << vp, vc;
    Mat h = ref_attend(toy.layer.video_sa, x, x, true, heads, [&](int q, int k) { return vmask(q, k); });
    Mat m = ref_attend(toy.layer.motion_ca, h, tm, false, heads, [](int, int) { return true; });
    Mat expect = ref_attend(toy.layer.window_ca, m, af, false, heads, [&](int q, int k) {
        if (q < 2) return false;
        Span s = audio_window_span(q - 2, 2, 8, w);
        return k >= s.begin && k < s.end;
    });
    CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("audio fusion step equals the unfused recomposition") {
    const int d = 8, heads = 2;
    Toy toy(d, 13);
    std::mt19937_64 rng(14);
    FusionWindows w;
    w.f_v_len = 3;
    Mat sp = fixtures::random_mat(2, d, rng), ap = fixtures::random_mat(3, d, rng), ac = fixtures::random_mat(3, d, rng),
        vp = fixtures::random_mat(5, d, rng);
    AttentionMask mask = causal(8);
    Mat got = audio_fusion_step(toy.layer, C(sp), C(ap), C(ac), C(vp), mask, w, heads).value();
    Mat x(8, d);
    x << sp, ap, ac;
    Mat h = ref_attend(toy.layer.audio_sa, x, x, true, heads, [&](int q, int k) { return mask(q, k); });
    Mat expect = ref_attend(toy.layer.audio_ca, h, vp.bottomRows(3), false, heads, [](int, int) { return true; });
    CHECK(got.rows() == 8);
    CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("zero cross-attention projection reduces to self-attention only") {
    const int d = 8;
    Toy toy(d, 15);
    toy.layer.audio_ca.wo.node()->value.setZero();
    std::mt19937_64 rng(16);
    FusionWindows w;
    Mat sp = fixtures::random_mat(2, d, rng), ac = fixtures::random_mat(4, d, rng), vp = fixtures::random_mat(6, d, rng);
    AttentionMask mask = causal(6);
    Mat fused = audio_fusion_step(toy.layer, C(sp), C(Mat(0, d)), C(ac), C(vp), mask, w, 2).value();
    Mat sa_only = audio_fusion_step(toy.layer, C(sp), C(Mat(0, d)), C(ac), Var(), mask, w, 2).value();
    CHECK(fused == sa_only);
}

TEST_CASE("empty motion directives pass the residual through") {
    const int d = 8;
    Toy toy(d, 17);
    std::mt19937_64 rng(18);
    FusionWindows w;
    Mat h = fixtures::random_mat(3, d, rng);
    Mat out = video_cross_fusion(toy.layer, C(h), 3, C(Mat(0, d)), C(fixtures::random_mat(8, d, rng)), w, 2).value();
    CHECK(out == h);
}

TEST_CASE("fusion steps preserve shape and reject mixed widths") {
    Toy toy(8, 19);
    std::mt19937_64 rng(20);
    FusionWindows w;
    AttentionMask m = causal(5);
    CHECK_THROWS_AS(audio_fusion_step(toy.layer, C(fixtures::random_mat(1, 8, rng)), C(fixtures::random_mat(1, 4, rng)),
                                      C(fixtures::random_mat(3, 8, rng)), Var(), m, w, 2),
                    Error);
    AttentionMask vm(4, 4, true);
    CHECK_THROWS_AS(video_fusion_step(toy.layer, C(fixtures::random_mat(2, 8, rng)), C(fixtures::random_mat(2, 8, rng)),
                                      C(fixtures::random_mat(1, 6, rng)), Var(), vm, w, 2),
                    Error);
    Mat out = video_fusion_step(toy.layer, C(fixtures::random_mat(2, 8, rng)), C(fixtures::random_mat(2, 8, rng)),
                                C(fixtures::random_mat(1, 8, rng)), C(fixtures::random_mat(8, 8, rng)), vm, w, 2)
                  .value();
    CHECK(out.rows() == 4);
    CHECK(out.cols() == 8);
}

TEST_CASE("fusion locality under perturbation") {
    for (uint64_t seed = 0; seed < 20; ++seed) {
        auto r = oracles::fusion_locality(seed);
        CHECK(r.checks == 14 + 48 * 12);
        CHECK(r.outside_changed == 0);
        CHECK(r.inside_unchanged == 0);
    }
}
