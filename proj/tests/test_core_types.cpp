#include "doctest.h"
#include "fixtures.hpp"

#include <set>
#include <sstream>

#include "mavid/binary_io.hpp"
#include "mavid/records.hpp"

using namespace mavid;

TEST_CASE("validate_config accepts the defaults and reports the first violation") {
    ModelConfig c;
    c.d_model = 32;
    c.n_heads = 4;
    CHECK_NOTHROW(validate_config(c));
    CHECK(ModelConfig{}.f_v_window == 10);
    CHECK(ModelConfig{}.f_a_window == 4);
    CHECK_NOTHROW(validate_config(ModelConfig{}));

    c.d_model = 30;
    try {
        validate_config(c);
        FAIL("expected InvalidConfig");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidConfig);
        CHECK(std::string(e.what()).find("d_model not divisible by n_heads") != std::string::npos);
    }

    ModelConfig z;
    z.latent_len = 0;
    CHECK_THROWS_AS(validate_config(z), Error);
    ModelConfig v;
    v.audio_vocab = audio_special::count;
    CHECK_THROWS_AS(validate_config(v), Error);
}

TEST_CASE("reserved ids are unique and below content ids") {
    std::set<int32_t> text{text_special::pad, text_special::m_bos, text_special::m_eos, text_special::clip_sep};
    CHECK(text.size() == static_cast<size_t>(text_special::count));
    CHECK(*text.rbegin() < text_special::count);
    std::set<int32_t> audio{audio_special::pad, audio_special::audio_bos, audio_special::audio_eos};
    CHECK(audio.size() == static_cast<size_t>(audio_special::count));
    CHECK(*audio.rbegin() < audio_special::count);
    CHECK(Token::text(text_special::m_bos).is_special());
    CHECK_FALSE(Token::text(text_special::count).is_special());
}

TEST_CASE("clip validation") {
    ModelConfig c;
    std::mt19937_64 rng(1);
    AudioClip ok = fixtures::random_audio(c.codebooks, 5, c.audio_vocab, rng);
    CHECK_NOTHROW(validate_clip(ok, c));
    AudioClip wrong_rows = fixtures::random_audio(c.codebooks + 1, 5, c.audio_vocab, rng);
    CHECK_THROWS_AS(validate_clip(wrong_rows, c), Error);
    ok.at(1, 2) = c.audio_vocab;
    CHECK_THROWS_AS(validate_clip(ok, c), Error);

    LatentClip lc(fixtures::random_mat(3, 2, rng));
    CHECK_NOTHROW(validate_clip(lc));
    lc.latents(1, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(validate_clip(lc), Error);
    CHECK_THROWS_AS(validate_clip(LatentClip{}), Error);
}

TEST_CASE("record round trip is the identity") {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 200; ++i) {
        std::uniform_int_distribution<int> len(1, 20), cb(1, 4);
        AudioClip a = fixtures::random_audio(cb(rng), len(rng), 64, rng);
        LatentClip v(fixtures::random_mat(len(rng), cb(rng), rng));
        TokenList t = fixtures::random_text(len(rng), 64, rng);
        t.push_back(a.token(0, 0));
        std::stringstream ss;
        write_record(ss, a);
        write_record(ss, v);
        write_record(ss, t);
        CHECK(read_record_as<AudioClip>(ss) == a);
        CHECK(read_record_as<LatentClip>(ss) == v);
        CHECK(read_record_as<TokenList>(ss) == t);
    }
}

TEST_CASE("record header is little-endian and versioned") {
    AudioClip a(1, 2, std::vector<int32_t>{5, 6});
    std::stringstream ss;
    write_record(ss, a);
    const std::string bytes = ss.str();
    REQUIRE(bytes.size() == 4 + 4 + 4 + 8 + 8);
    CHECK(bytes.substr(0, 4) == "MVRC");
    CHECK(static_cast<uint8_t>(bytes[4]) == kRecordVersion);
    CHECK(static_cast<uint8_t>(bytes[8]) == 1);
    CHECK(static_cast<uint8_t>(bytes[12]) == 1);
    CHECK(static_cast<uint8_t>(bytes[16]) == 2);
    CHECK(static_cast<uint8_t>(bytes[20]) == 5);
}

TEST_CASE("corrupt records are rejected") {
    std::stringstream bad_magic("XXXX");
    CHECK_THROWS_AS(read_record(bad_magic), Error);

    AudioClip a(2, 3);
    std::stringstream ss;
    write_record(ss, a);
    std::string bytes = ss.str();
    bytes[4] = 9;  // version
    std::stringstream wrong_version(bytes);
    CHECK_THROWS_AS(read_record(wrong_version), Error);

    std::stringstream truncated(ss.str().substr(0, 22));
    CHECK_THROWS_AS(read_record(truncated), Error);

    std::stringstream s2;
    write_record(s2, a);
    CHECK_THROWS_AS(read_record_as<LatentClip>(s2), Error);
}

TEST_CASE("binary io primitives") {
    std::stringstream ss;
    io::write_u32(ss, 0x01020304u);
    io::write_f64(ss, -1.5);
    io::write_string(ss, "abc");
    CHECK(static_cast<uint8_t>(ss.str()[0]) == 4);
    CHECK(io::read_u32(ss) == 0x01020304u);
    CHECK(io::read_f64(ss) == -1.5);
    CHECK(io::read_string(ss) == "abc");
    CHECK(io::fnv1a("") == 0xcbf29ce484222325ull);
    CHECK(io::fnv1a("a") == 0xaf63dc4c8601ec8cull);
}
