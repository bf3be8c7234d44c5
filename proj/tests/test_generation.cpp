#include "doctest.h"
#include "fixtures.hpp"

#include <sstream>

#include "mavid/generation.hpp"
#include "mavid/records.hpp"

using namespace mavid;

namespace {

std::shared_ptr<CreatorParams> tiny_params(uint64_t seed, bool fusion = true) {
    ModelConfig c = fixtures::tiny_config();
    c.seed = seed;
    c.fusion = fusion;
    return CreatorParams::create(c);
}

DirectivePair prompt(uint64_t seed, const ModelConfig& c) {
    std::mt19937_64 rng(seed);
    return {fixtures::random_text(3, c.text_vocab, rng), fixtures::random_text(seed % 3, c.text_vocab, rng)};
}

std::vector<DirectivePair> prompts(int n, const ModelConfig& c) {
    std::vector<DirectivePair> out;
    for (int j = 0; j < n; ++j) out.push_back(prompt(100 + j, c));
    return out;
}

}  // namespace

TEST_CASE("one Euler step is x0 plus the initial velocity") {
    std::mt19937_64 rng(3);
    const Mat x0 = fixtures::random_mat(5, 3, rng);
    const Mat w = fixtures::random_mat(3, 3, rng);
    auto field = [&](const Mat& x, double t) -> Mat { return (x * w).array() + t; };
    CHECK(sample_diffusion(field, x0, 1) == Mat(x0 + field(x0, 0.0)));

    auto p = tiny_params(4);
    const auto& c = p->config;
    AudioClip a = fixtures::random_audio(c.codebooks, c.audio_len, c.audio_vocab, rng);
    CreatorSession session(*p, prompt(1, c), nullptr, nullptr, 0);
    const Mat y0 = fixtures::random_mat(c.latent_len, c.latent_dim, rng);
    const Mat v0 = session.velocity(a, y0, 0.0);
    CHECK(sample_diffusion([&](const Mat& x, double t) { return session.velocity(a, x, t); }, y0, 1) == Mat(y0 + v0));
    CHECK_THROWS_AS(sample_diffusion(field, x0, 0), Error);
}

TEST_CASE("a constant velocity field integrates to x0 plus the constant") {
    auto p = tiny_params(5);
    const auto& c = p->config;
    ag::Var w = p->velocity_head.weight, b = p->velocity_head.bias;
    w.mutable_value().setZero();
    std::mt19937_64 rng(8);
    const Mat shift = fixtures::random_mat(1, c.latent_dim, rng);
    b.mutable_value() = shift;
    AudioClip a = fixtures::random_audio(c.codebooks, c.audio_len, c.audio_vocab, rng);
    CreatorSession session(*p, prompt(2, c), nullptr, nullptr, 0);
    const Mat x0 = fixtures::random_mat(c.latent_len, c.latent_dim, rng);
    const Mat expect = x0.rowwise() + shift.row(0);
    for (int steps : {1, 2, 3, 7, 16, 64}) {
        Mat out = sample_diffusion([&](const Mat& x, double t) { return session.velocity(a, x, t); }, x0, steps);
        CHECK((out - expect).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("reference latent is injected bit-exactly") {
    for (uint64_t s = 0; s < 25; ++s) {
        auto p = tiny_params(s);
        const auto& c = p->config;
        std::mt19937_64 rng(s);
        Vec ref = fixtures::random_mat(1, c.latent_dim, rng).row(0) * 3.0;
        GenerationOptions o;
        o.seed = s;
        o.top_k = s % 2 ? 3 : 0;
        ClipOutput out = generate_clip(*p, GenerationState{}, prompt(s, c), &ref, o);
        CHECK(out.video.latents.row(0) == ref.transpose());
        CHECK(out.video.latents.bottomRows(c.latent_len - 1).cwiseAbs().maxCoeff() > 0.0);
        LongOutput lo = generate_long(*p, prompts(2, c), 2, &ref, o);
        CHECK(lo.video[0].latents.row(0) == ref.transpose());
        CHECK_FALSE(lo.video[1].latents.row(0) == ref.transpose());
    }
}

TEST_CASE("reference on a later clip is rejected") {
    auto p = tiny_params(1);
    const auto& c = p->config;
    Vec ref = Vec::Zero(c.latent_dim);
    ClipOutput first = generate_clip(*p, GenerationState{}, prompt(1, c), nullptr, {});
    CHECK_THROWS_WITH_AS(generate_clip(*p, first.next, prompt(2, c), &ref, {}), doctest::Contains("RefOnLaterClip"),
                         Error);
}

TEST_CASE("generation is deterministic in the seed") {
    auto p = tiny_params(6);
    const auto& c = p->config;
    GenerationOptions o;
    o.top_k = 4;
    o.seed = 77;
    LongOutput a = generate_long(*p, prompts(3, c), 3, nullptr, o);
    LongOutput b = generate_long(*p, prompts(3, c), 3, nullptr, o);
    std::ostringstream sa, sb;
    write_stream(sa, a);
    write_stream(sb, b);
    CHECK(sa.str() == sb.str());
    o.seed = 78;
    std::ostringstream sc;
    write_stream(sc, generate_long(*p, prompts(3, c), 3, nullptr, o));
    CHECK(sc.str() != sa.str());
}

TEST_CASE("a single clip run reduces to generate_clip") {
    auto p = tiny_params(9);
    const auto& c = p->config;
    GenerationOptions o;
    o.seed = 5;
    o.top_k = 2;
    ClipOutput one = generate_clip(*p, GenerationState{}, prompt(100, c), nullptr, o);
    LongOutput lo = generate_long(*p, prompts(1, c), 1, nullptr, o);
    REQUIRE(lo.audio.size() == 1);
    CHECK(lo.audio[0] == one.audio);
    CHECK(lo.video[0] == one.video);
    CHECK(lo.clip_seeds[0] == one.clip_seed);
}

TEST_CASE("long generation chains the state clip by clip") {
    auto p = tiny_params(10);
    const auto& c = p->config;
    GenerationOptions o;
    o.seed = 12;
    auto ps = prompts(3, c);
    LongOutput lo = generate_long(*p, ps, 3, nullptr, o);
    GenerationState st;
    for (int j = 0; j < 3; ++j) {
        ClipOutput out = generate_clip(*p, st, ps[static_cast<size_t>(j)], nullptr, o);
        CHECK(out.audio == lo.audio[static_cast<size_t>(j)]);
        CHECK(out.video == lo.video[static_cast<size_t>(j)]);
        CHECK(out.next.clip_index == j + 1);
        st = out.next;
    }

    o.use_history = false;
    LongOutput cut = generate_long(*p, ps, 3, nullptr, o);
    for (int j = 0; j < 3; ++j) {
        GenerationState empty;
        empty.clip_index = j;
        ClipOutput out = generate_clip(*p, empty, ps[static_cast<size_t>(j)], nullptr, o);
        CHECK(out.video == cut.video[static_cast<size_t>(j)]);
    }
    CHECK(cut.video[0] == lo.video[0]);
    CHECK_FALSE(cut.video[2] == lo.video[2]);
}

TEST_CASE("history changes the next clip") {
    auto p = tiny_params(11);
    const auto& c = p->config;
    std::mt19937_64 rng(2);
    int differs = 0;
    for (uint64_t s = 0; s < 10; ++s) {
        GenerationState a, b;
        a.a_prev = fixtures::random_audio(c.codebooks, c.audio_len, c.audio_vocab, rng);
        a.v_prev = LatentClip(fixtures::random_mat(c.latent_len, c.latent_dim, rng));
        a.clip_index = b.clip_index = 1;
        b = a;
        b.a_prev = fixtures::random_audio(c.codebooks, c.audio_len, c.audio_vocab, rng);
        GenerationOptions o;
        o.seed = s;
        differs += !(generate_clip(*p, a, prompt(s, c), nullptr, o).audio == generate_clip(*p, b, prompt(s, c), nullptr, o).audio);
    }
    CHECK(differs >= 1);
}

TEST_CASE("stream lengths follow the clip sizes") {
    auto p = tiny_params(12);
    const auto& c = p->config;
    for (int n = 1; n <= 4; ++n) {
        LongOutput lo = generate_long(*p, prompts(n, c), n, nullptr, {});
        REQUIRE(lo.audio.size() == static_cast<size_t>(n));
        REQUIRE(lo.video.size() == static_cast<size_t>(n));
        int audio_total = 0, latent_total = 0;
        for (int j = 0; j < n; ++j) {
            CHECK_NOTHROW(validate_clip(lo.audio[static_cast<size_t>(j)], c));
            CHECK(lo.video[static_cast<size_t>(j)].channels() == c.latent_dim);
            CHECK(lo.video[static_cast<size_t>(j)].latents.allFinite());
            audio_total += lo.audio[static_cast<size_t>(j)].length();
            latent_total += lo.video[static_cast<size_t>(j)].length();
        }
        CHECK(audio_total == n * c.audio_len);
        CHECK(latent_total == n * c.latent_len);
    }
    CHECK_THROWS_WITH_AS(generate_long(*p, prompts(2, c), 3, nullptr, {}), doctest::Contains("ClipCountMismatch"), Error);
    auto bad = prompts(2, c);
    bad[1].speech.push_back(Token::text(text_special::m_bos));
    CHECK_THROWS_WITH_AS(generate_long(*p, bad, 2, nullptr, {}), doctest::Contains("clip 1"), Error);
}

TEST_CASE("cached greedy decoding matches the full-forward argmax") {
    for (uint64_t s = 0; s < 6; ++s) {
        auto p = tiny_params(20 + s, s % 2 == 0);
        const auto& c = p->config;
        std::mt19937_64 rng(s);
        GenerationState st;
        if (s >= 3) {
            st.a_prev = fixtures::random_audio(c.codebooks, c.audio_len, c.audio_vocab, rng);
            st.v_prev = LatentClip(fixtures::random_mat(c.latent_len, c.latent_dim, rng));
            st.clip_index = 1;
        }
        ClipOutput out = generate_clip(*p, st, prompt(s, c), nullptr, {});
        ClipPairInput in;
        in.prompt = prompt(s, c);
        in.a_prev = st.a_prev;
        in.v_prev = st.v_prev;
        in.clip_index = st.clip_index;
        in.a_cur = out.audio;
        in.v_cur = out.video;
        in.noise = Mat::Zero(c.latent_len, c.latent_dim);
        auto fwd = forward_clip_pair(*p, in);
        DelayGrid grid = apply_delay_pattern(out.audio);
        int cells = 0, agree = 0;
        for (int k = 0; k < c.codebooks; ++k) {
            const Mat& l = fwd.audio_logits[static_cast<size_t>(k)].value();
            for (int col = 0; col < grid.width; ++col) {
                if (!delay_cell_is_content(k, col, c.audio_len)) continue;
                Eigen::Index best;
                l.row(col).tail(c.audio_vocab - audio_special::count).maxCoeff(&best);
                ++cells;
                agree += audio_special::count + best == grid.at(k, col);
            }
        }
        CHECK(cells == c.codebooks * c.audio_len);
        CHECK_MESSAGE(agree == cells, "case " << s);
    }
}

TEST_CASE("stream file and manifest") {
    auto p = tiny_params(13);
    const auto& c = p->config;
    LongOutput lo = generate_long(*p, prompts(3, c), 3, nullptr, {});
    std::stringstream ss;
    write_stream(ss, lo);
    for (int j = 0; j < 3; ++j) {
        CHECK(read_record_as<AudioClip>(ss) == lo.audio[static_cast<size_t>(j)]);
        CHECK(read_record_as<LatentClip>(ss) == lo.video[static_cast<size_t>(j)]);
    }
    std::ostringstream man;
    write_stream_manifest(man, lo, 4);
    std::istringstream lines(man.str());
    std::string line;
    int n = 0;
    while (std::getline(lines, line)) {
        CHECK(line.find("\"clip\":" + std::to_string(n)) != std::string::npos);
        CHECK(line.find("\"run_seed\":4") != std::string::npos);
        ++n;
    }
    CHECK(n == 3);
}
